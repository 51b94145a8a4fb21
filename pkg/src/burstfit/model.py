"""The k-state arrival automaton, transition penalties and fit costs.

A fit assigns one automaton state to each gap.  State ``i`` emits gaps with
the exponential density ``alpha_i * exp(-alpha_i * x)`` where the rates form
a geometric ladder ``alpha_i = alpha_0 * s**i`` starting at the uniform rate
``n / T``.  The cost of a fit is the negative log-likelihood of the gaps plus
a penalty for every change of state, with the automaton starting in state 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .stream import DocumentStream, GapSequence


class ModelError(ValueError):
    pass


class ScaleError(ModelError):
    """The requested maximum rate does not exceed the uniform rate."""


class ShapeError(ModelError):
    """A fit does not line up with the gaps it is evaluated against."""


# ---------------------------------------------------------------------------
# Automaton


@dataclass(frozen=True, eq=False)
class Automaton:
    k: int
    alpha_0: float
    s: float
    gamma: float = 1.0
    n: int = 1
    T: float = 1.0
    alphas: np.ndarray = field(init=False, repr=False)
    neg_log_alphas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 2:
            raise ModelError(f"an automaton needs at least 2 states, got k={self.k}")
        if not self.alpha_0 > 0:
            raise ModelError(f"base rate must be positive, got {self.alpha_0!r}")
        if not self.s > 1:
            raise ScaleError(f"scale factor must exceed 1, got s={self.s!r}")
        if not self.gamma > 0:
            raise ModelError(f"gamma must be positive, got {self.gamma!r}")
        alphas = self.alpha_0 * self.s ** np.arange(self.k, dtype=float)
        alphas.flags.writeable = False
        nla = -np.log(alphas)
        nla.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "neg_log_alphas", nla)

    @property
    def alpha_max(self) -> float:
        return float(self.alphas[-1])

    def emission_costs(self, gaps: np.ndarray) -> np.ndarray:
        """``(len(gaps), k)`` matrix of ``-ln f_j(x_t)``."""
        x = np.asarray(gaps, dtype=float)
        return self.neg_log_alphas[None, :] + x[:, None] * self.alphas[None, :]


def build_automaton(n: int, T: float, k: int, alpha_max: float = 1.0, gamma: float = 1.0) -> Automaton:
    """Automaton whose ``k`` rates run geometrically from ``n/T`` to ``alpha_max``."""
    if n < 1:
        raise ModelError(f"need at least one gap, got n={n}")
    if not T > 0:
        raise ModelError(f"span must be positive, got T={T!r}")
    if k < 2:
        raise ModelError(f"an automaton needs at least 2 states, got k={k}")
    alpha_0 = n / T
    if not alpha_max > alpha_0:
        raise ScaleError(
            f"alpha_max={alpha_max!r} must exceed the uniform rate n/T={alpha_0!r}"
        )
    s = math.exp((math.log(alpha_max) - math.log(n) + math.log(T)) / (k - 1))
    return Automaton(k=k, alpha_0=alpha_0, s=s, gamma=gamma, n=n, T=T)


def gap_cost(a: Automaton, state: int, x: float) -> float:
    alpha = float(a.alphas[state])
    return -math.log(alpha) + alpha * x


# ---------------------------------------------------------------------------
# Transition penalties

VARIANTS = ("a", "b", "c", "d", "e", "f", "g", "h", "two_state")
UPWARD_ONLY = ("a", "c", "e", "g")
SYMMETRIC_COUNTERPART = {"a": "b", "c": "d", "e": "f", "g": "h"}


@dataclass(frozen=True)
class CostFunctionId:
    variant: str = "g"
    p: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown cost variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.variant == "two_state":
            if self.p is None or not 0 < self.p < 1:
                raise ModelError(f"two_state cost needs 0 < p < 1, got p={self.p!r}")
        elif self.p is not None:
            raise ModelError(f"p only applies to the two_state cost, not {self.variant!r}")

    @classmethod
    def parse(cls, name: str, p: float | None = None) -> "CostFunctionId":
        name = name.strip().lower().replace("-", "_")
        if name.startswith("tau_"):
            name = name[4:]
        return cls(name, p if name == "two_state" else None)

    def __str__(self) -> str:
        if self.variant == "two_state":
            return f"two_state(p={self.p})"
        return f"tau_{self.variant}"


def transition_cost(cf: CostFunctionId, i: int, j: int, n: int, E: int, gamma: float = 1.0) -> float:
    """Penalty for moving from state ``i`` to state ``j``.

    ``n`` is the gap count (used by tau_a/tau_b) and ``E`` the total number of
    states (used by tau_g/tau_h).  Staying in place is always free.
    """
    if i == j:
        return 0.0
    d = j - i
    v = cf.variant
    if v == "two_state":
        return math.log((1.0 - cf.p) / cf.p)
    if v in UPWARD_ONLY and d < 0:
        return 0.0
    d = abs(d)
    if v in ("a", "b"):
        return d * gamma * math.log(n)
    if v in ("c", "d"):
        return gamma * math.log(d)
    if v in ("e", "f"):
        return gamma * math.sqrt(d)
    # g, h
    return d * gamma / math.log(E)


def transition_matrix(cf: CostFunctionId, a: Automaton) -> np.ndarray:
    """``(k, k)`` matrix with entry ``[i, j] = tau(i, j)``."""
    k = a.k
    m = np.array(
        [[transition_cost(cf, i, j, a.n, k, a.gamma) for j in range(k)] for i in range(k)],
        dtype=float,
    )
    m.flags.writeable = False
    return m


# ---------------------------------------------------------------------------
# Run-length fits


class Run(NamedTuple):
    state: int
    first_gap: int
    last_gap: int

    @property
    def length(self) -> int:
        return self.last_gap - self.first_gap + 1


@dataclass(frozen=True)
class Fit:
    """State assignment for gaps ``0..n-1`` as a list of runs."""

    runs: tuple[Run, ...]

    def __init__(self, runs: Iterable[Sequence[int]]):
        rs = tuple(Run(int(r[0]), int(r[1]), int(r[2])) for r in runs)
        if not rs:
            raise ShapeError("a fit needs at least one run")
        expected = 0
        for r in rs:
            if r.first_gap != expected or r.last_gap < r.first_gap:
                raise ShapeError(f"runs must tile the gaps contiguously from 0; bad run {tuple(r)}")
            if r.state < 0:
                raise ShapeError(f"negative state in run {tuple(r)}")
            expected = r.last_gap + 1
        object.__setattr__(self, "runs", rs)

    @property
    def n(self) -> int:
        return self.runs[-1].last_gap + 1

    @property
    def states(self) -> list[int]:
        return [r.state for r in self.runs]

    def __len__(self) -> int:
        return len(self.runs)

    def __iter__(self):
        return iter(self.runs)

    def is_normalized(self) -> bool:
        return all(a.state != b.state for a, b in zip(self.runs, self.runs[1:]))

    def change_count(self) -> int:
        """Number of adjacent state changes in the normalized form."""
        return sum(1 for a, b in zip(self.runs, self.runs[1:]) if a.state != b.state)

    def check(self, k: int, n: int | None = None) -> None:
        if n is not None and self.n != n:
            raise ShapeError(f"fit covers {self.n} gaps but the stream has {n}")
        bad = [r for r in self.runs if r.state >= k]
        if bad:
            raise ShapeError(f"state {bad[0].state} out of range for a {k}-state automaton")


def expand(fit: Fit) -> np.ndarray:
    out = np.empty(fit.n, dtype=np.int64)
    for state, first, last in fit.runs:
        out[first : last + 1] = state
    return out


def compact(dense: Sequence[int]) -> Fit:
    dense = [int(q) for q in dense]
    if not dense:
        raise ShapeError("cannot compact an empty state sequence")
    runs = []
    start = 0
    for t in range(1, len(dense) + 1):
        if t == len(dense) or dense[t] != dense[start]:
            runs.append((dense[start], start, t - 1))
            start = t
    return Fit(runs)


def normalize(fit: Fit) -> Fit:
    merged: list[list[int]] = []
    for state, first, last in fit.runs:
        if merged and merged[-1][0] == state:
            merged[-1][2] = last
        else:
            merged.append([state, first, last])
    return Fit(merged)


# ---------------------------------------------------------------------------
# Cost evaluation


def _as_gap_array(gaps: GapSequence | Sequence[float]) -> np.ndarray:
    if isinstance(gaps, GapSequence):
        return gaps.gaps
    return np.asarray(gaps, dtype=float)


def dense_cost(a: Automaton, cf: CostFunctionId, dense: Sequence[int], gaps: GapSequence) -> float:
    x = _as_gap_array(gaps)
    q = np.asarray(dense, dtype=np.int64)
    if q.shape != x.shape:
        raise ShapeError(f"state sequence has {q.size} entries but there are {x.size} gaps")
    if q.size and (q.min() < 0 or q.max() >= a.k):
        raise ShapeError("state out of range")
    emission = a.neg_log_alphas[q] + a.alphas[q] * x
    tau = transition_matrix(cf, a)
    prev = np.concatenate(([0], q[:-1]))
    transitions = tau[prev, q]
    return math.fsum(emission) + math.fsum(transitions)


def total_cost(a: Automaton, cf: CostFunctionId, fit: Fit, gaps: GapSequence) -> float:
    """Transition penalties (from start state 0) plus gap emission costs."""
    x = _as_gap_array(gaps)
    if fit.n != x.size:
        raise ShapeError(f"fit covers {fit.n} gaps but there are {x.size}")
    fit.check(a.k)
    return dense_cost(a, cf, expand(fit), gaps)


def frequency_curve(a: Automaton, fit: Fit, stream: DocumentStream) -> list[tuple[float, float, float]]:
    """Step curve ``(time_start, time_end, rate)``, one step per run."""
    ts = stream.timestamps
    if fit.n != len(ts) - 1:
        raise ShapeError(f"fit covers {fit.n} gaps but the stream has {len(ts) - 1}")
    fit.check(a.k)
    return [(ts[first], ts[last + 1], float(a.alphas[state])) for state, first, last in fit.runs]


# ---------------------------------------------------------------------------
# TSV files


def write_fit(fit: Fit, a: Automaton, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# first_gap\tlast_gap\tstate\trate\n")
        for state, first, last in fit.runs:
            fh.write(f"{first}\t{last}\t{state}\t{float(a.alphas[state])!r}\n")


def read_fit(path: str | Path) -> Fit:
    runs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ShapeError(f"{path}:{lineno}: expected first_gap, last_gap, state")
            try:
                first, last, state = int(fields[0]), int(fields[1]), int(fields[2])
            except ValueError:
                raise ShapeError(f"{path}:{lineno}: malformed fit row {line!r}") from None
            runs.append((state, first, last))
    return Fit(runs)


def write_curve(curve: Iterable[tuple[float, float, float]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# time_start\ttime_end\trate\n")
        for start, end, rate in curve:
            fh.write(f"{start!r}\t{end!r}\t{rate!r}\n")
