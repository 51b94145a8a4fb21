"""Tracking a stream as new documents arrive.

Two shortcuts avoid refitting from scratch: a one-gap local update that only
looks at the last state of the previous fit, and a refit whose initial
population is grown from the previous fit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ea import EAConfig, RunStats, evolve_from
from .model import Automaton, CostFunctionId, Fit, Run, ShapeError, gap_cost, transition_cost
from .stream import GapSequence

UP, DOWN, FLAT = "UP", "DOWN", "FLAT"


def classify_trend(old_state: int, new_state: int) -> str:
    if new_state > old_state:
        return UP
    if new_state < old_state:
        return DOWN
    return FLAT


@dataclass(frozen=True)
class TrendUpdate:
    old_state: int
    new_state: int

    @property
    def trend(self) -> str:
        return classify_trend(self.old_state, self.new_state)

    def format(self) -> str:
        return f"{self.old_state}\t{self.new_state}\t{self.trend}"


def local_trend_update(a: Automaton, cf: CostFunctionId, old_state: int, x: float) -> TrendUpdate:
    """State best explaining one new gap ``x`` given the fit ended in ``old_state``.

    Minimises the transition penalty plus ``-ln f_j(x)``.  Ties prefer the
    state nearest ``old_state``, then the lower index.
    """
    if not 0 <= old_state < a.k:
        raise ValueError(f"state {old_state} out of range for a {a.k}-state automaton")
    if not x >= 0:
        raise ValueError(f"gap must be non-negative, got {x!r}")
    best_key = None
    best_state = old_state
    for j in range(a.k):
        c = transition_cost(cf, old_state, j, a.n, a.k, a.gamma) + gap_cost(a, j, x)
        key = (c, abs(j - old_state), j)
        if best_key is None or key < best_key:
            best_key, best_state = key, j
    return TrendUpdate(old_state, best_state)


def seed_individual(prev_fit: Fit, n: int) -> tuple[Run, ...]:
    """``prev_fit`` with its last run stretched to cover gaps up to ``n - 1``."""
    if prev_fit.n > n:
        raise ShapeError(f"previous fit covers {prev_fit.n} gaps, more than the {n} of the extended stream")
    runs = prev_fit.runs
    last = runs[-1]
    return runs[:-1] + (Run(last.state, last.first_gap, n - 1),)


def seeded_refit(
    prev_fit: Fit,
    extended_gaps: GapSequence,
    automaton: Automaton,
    cf: CostFunctionId,
    config: EAConfig = EAConfig(),
    last_run_bias: float = 0.5,
) -> tuple[Fit, RunStats]:
    """Refit an extended stream starting from the previous fit.

    ``automaton`` must be built for the extended stream; the seed's state
    indices are reused on its rate ladder unchanged.
    """
    n = extended_gaps.n
    seed = seed_individual(prev_fit, n)
    Fit(seed).check(automaton.k, n)
    return evolve_from(seed, extended_gaps, automaton, cf, config, last_run_bias)
