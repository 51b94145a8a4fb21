"""Steady-state elitist evolutionary search over run-list fits.

An individual is a list of runs ``(state, first_gap, last_gap)``.  Only
documents whose neighbouring gaps differ by at least ``gap_ratio_threshold``
(one gap 50% longer than the other by default) are used as run boundaries by
initialisation, crossover and the split mutation, which keeps the search
space small for streams with long stretches of similar gaps.
"""

from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import Automaton, CostFunctionId, Fit, Run, ShapeError, transition_matrix
from .stream import GapSequence

Runs = tuple  # tuple[Run, ...]


@dataclass(frozen=True)
class EAConfig:
    population_size: int = 200
    max_generations: int = 200
    crossover_rate: float = 0.40
    mutation_rate: float = 0.05
    convergence_threshold: float = 1e-6
    convergence_window: int = 20
    rng_seed: int = 0
    gap_ratio_threshold: float = 0.5
    check_invariants: bool = False

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.max_generations < 0:
            raise ValueError("max_generations must be non-negative")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.convergence_window < 1:
            raise ValueError("convergence_window must be at least 1")
        if not self.convergence_threshold > 0:
            raise ValueError("convergence_threshold must be positive")
        if not self.gap_ratio_threshold >= 0:
            raise ValueError("gap_ratio_threshold must be non-negative")


@dataclass
class RunStats:
    """Outcome of one EA run, or an aggregate over several.

    For a single run ``average_cost`` and ``std_dev_cost`` describe the final
    population; :func:`aggregate` replaces them with the mean and standard
    deviation of the best costs across runs.
    """

    best_cost: float
    average_cost: float
    std_dev_cost: float
    generations_used: int
    wall_time: float
    runs: int = 1
    converged: bool = False
    trace: list[tuple[int, float, float]] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class Individual:
    fit: Fit
    fitness: float

    @property
    def runs(self) -> Runs:
        return self.fit.runs


def _trusted_fit(runs: Runs) -> Fit:
    f = object.__new__(Fit)
    object.__setattr__(f, "runs", tuple(runs))
    return f


# ---------------------------------------------------------------------------
# Fast evaluation


class Evaluator:
    """O(runs) cost evaluation using prefix sums of the gaps."""

    def __init__(self, a: Automaton, cf: CostFunctionId, gaps: GapSequence):
        x = gaps.gaps if isinstance(gaps, GapSequence) else np.asarray(gaps, dtype=float)
        self.n = int(x.size)
        self.k = a.k
        self.prefix = [0.0] + np.cumsum(x).tolist()
        self.alphas = a.alphas.tolist()
        self.nla = a.neg_log_alphas.tolist()
        self.tau = transition_matrix(cf, a).tolist()

    def __call__(self, runs: Runs) -> float:
        P, nla, alphas, tau = self.prefix, self.nla, self.alphas, self.tau
        total = 0.0
        prev = 0
        for state, first, last in runs:
            total += tau[prev][state] + (last - first + 1) * nla[state] + alphas[state] * (P[last + 1] - P[first])
            prev = state
        return total


# ---------------------------------------------------------------------------
# Split-point eligibility


def eligible_cuts(gaps: GapSequence | Sequence[float], ratio_threshold: float = 0.5) -> list[int]:
    """Document positions ``c`` (between gap ``c-1`` and gap ``c``) whose
    neighbouring gaps are *not* comparable: the longer one is at least
    ``1 + ratio_threshold`` times the shorter one."""
    x = gaps.gaps if isinstance(gaps, GapSequence) else np.asarray(gaps, dtype=float)
    left, right = x[:-1], x[1:]
    hi = np.maximum(left, right)
    lo = np.minimum(left, right)
    ok = (hi > lo) & (hi >= (1.0 + ratio_threshold) * lo)
    return (np.flatnonzero(ok) + 1).tolist()


class _Problem:
    """Everything the operators need about one stream, precomputed."""

    def __init__(self, gaps: GapSequence, k: int, ratio_threshold: float):
        x = gaps.gaps if isinstance(gaps, GapSequence) else np.asarray(gaps, dtype=float)
        self.x = x.tolist()
        self.n = len(self.x)
        self.k = k
        self.cuts = eligible_cuts(x, ratio_threshold)
        self.cut_set = set(self.cuts)

    def cuts_inside(self, first: int, last: int) -> tuple[int, int]:
        """Index range into ``cuts`` of positions strictly inside a run."""
        lo = bisect.bisect_right(self.cuts, first)
        hi = bisect.bisect_right(self.cuts, last)
        return lo, hi


def _normalize(runs) -> Runs:
    out: list[Run] = []
    for r in runs:
        if out and out[-1].state == r.state:
            out[-1] = Run(r.state, out[-1].first_gap, r.last_gap)
        else:
            out.append(r)
    return tuple(out)


def _clamp(state: int, k: int) -> int:
    return 0 if state < 0 else (k - 1 if state >= k else state)


def _rand_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform integer in ``[lo, hi)``."""
    return int(rng.integers(lo, hi))


def _covering(starts: list[int], gap: int) -> int:
    return bisect.bisect_right(starts, gap) - 1


# ---------------------------------------------------------------------------
# Operators


def _heuristic_runs(prob: _Problem, rng: np.random.Generator) -> Runs:
    k, x = prob.k, prob.x
    cuts = prob.cuts
    if cuts:
        keep = rng.random(len(cuts)) < rng.random()
        chosen = [c for c, kept in zip(cuts, keep) if kept]
    else:
        chosen = []
    state = _rand_int(rng, 0, k)
    runs = []
    start = 0
    for c in chosen:
        runs.append(Run(state, start, c - 1))
        step = _rand_int(rng, 1, k)
        # shorter gap after the cut means higher intensity
        state = _clamp(state + step if x[c] < x[c - 1] else state - step, k)
        start = c
    runs.append(Run(state, start, prob.n - 1))
    return _normalize(runs)


def _crossover_runs(p1: Runs, p2: Runs, cut: int, prob: _Problem, rng: np.random.Generator) -> Runs:
    """``p1`` left of document ``cut`` joined to ``p2`` right of it.

    Document ``cut`` sits between gaps ``cut - 1`` and ``cut``.  The run of
    each parent that contains gap ``cut`` spans the crossover point; together
    they cover the substream from the start of ``p1``'s run to the end of
    ``p2``'s, which becomes one run if the gaps around the cut are
    comparable and two runs split at the cut otherwise.
    """
    i1 = _covering([r.first_gap for r in p1], cut)
    i2 = _covering([r.first_gap for r in p2], cut)
    r1, r2 = p1[i1], p2[i2]
    if cut in prob.cut_set:
        middle = (Run(r1.state, r1.first_gap, cut - 1),) if r1.first_gap < cut else ()
        middle += (Run(r2.state, cut, r2.last_gap),)
    else:
        state = r1.state if rng.random() < 0.5 else r2.state
        middle = (Run(state, r1.first_gap, r2.last_gap),)
    return _normalize(p1[:i1] + middle + p2[i2 + 1 :])


def _mutate_runs(
    runs: Runs,
    prob: _Problem,
    rng: np.random.Generator,
    target_bias: float | None = None,
    variant: int | None = None,
) -> Runs:
    """Apply one randomly chosen mutation variant.

    Variants: 0 shifts a run's state by one, 1 joins two neighbouring runs,
    2 splits a run at an eligible document.  An inapplicable variant falls
    through to the next one in a random order; a forced ``variant`` that
    does not apply leaves the runs unchanged.

    With ``target_bias`` set, the last run is the mutation target with that
    probability and the other runs share the rest uniformly.
    """
    k = prob.k
    m = len(runs)

    def pick_run() -> int:
        if target_bias is not None and m > 1:
            if rng.random() < target_bias:
                return m - 1
            return _rand_int(rng, 0, m - 1)
        return _rand_int(rng, 0, m)

    order = rng.permutation(3).tolist() if variant is None else [variant]
    for v in order:
        if v == 0:
            i = pick_run()
            r = runs[i]
            delta = 1 if rng.random() < 0.5 else -1
            new = Run(_clamp(r.state + delta, k), r.first_gap, r.last_gap)
            return _normalize(runs[:i] + (new,) + runs[i + 1 :])
        if v == 1:
            if m < 2:
                continue
            i = pick_run()
            if i == m - 1:
                j = i - 1
            elif i == 0:
                j = 1
            else:
                j = i - 1 if rng.random() < 0.5 else i + 1
            lo, hi = min(i, j), max(i, j)
            a, b = runs[lo], runs[hi]
            state = a.state if rng.random() < 0.5 else b.state
            new = Run(state, a.first_gap, b.last_gap)
            return _normalize(runs[:lo] + (new,) + runs[hi + 1 :])
        # split at an eligible interior document
        if target_bias is not None:
            i = pick_run()
            lo, hi = prob.cuts_inside(runs[i].first_gap, runs[i].last_gap)
            if lo == hi:
                continue
        else:
            candidates = []
            for idx, r in enumerate(runs):
                lo, hi = prob.cuts_inside(r.first_gap, r.last_gap)
                if lo < hi:
                    candidates.append((idx, lo, hi))
            if not candidates:
                continue
            i, lo, hi = candidates[_rand_int(rng, 0, len(candidates))]
        r = runs[i]
        c = prob.cuts[_rand_int(rng, lo, hi)]
        left_longer = prob.x[c - 1] > prob.x[c]
        # the changed half moves toward the intensity its side of the cut implies
        if rng.random() < 0.5:
            left = Run(r.state, r.first_gap, c - 1)
            right = Run(_clamp(r.state + (1 if left_longer else -1), k), c, r.last_gap)
        else:
            left = Run(_clamp(r.state + (-1 if left_longer else 1), k), r.first_gap, c - 1)
            right = Run(r.state, c, r.last_gap)
        return _normalize(runs[:i] + (left, right) + runs[i + 1 :])
    return _normalize(runs)


def heuristic_individual(
    gaps: GapSequence,
    k: int,
    rng: np.random.Generator,
    evaluate: Evaluator | None = None,
    ratio_threshold: float = 0.5,
) -> Individual:
    """Random individual whose run boundaries sit only at eligible documents.

    Each state change follows the gaps: up when the gap shortens across the
    boundary, down when it lengthens, by a random step.  Without an
    ``evaluate`` callable the fitness is left as NaN.
    """
    prob = _Problem(gaps, k, ratio_threshold)
    runs = _heuristic_runs(prob, rng)
    return Individual(_trusted_fit(runs), evaluate(runs) if evaluate else math.nan)


def crossover(
    parent1: Individual,
    parent2: Individual,
    gaps: GapSequence,
    rng: np.random.Generator,
    k: int | None = None,
    evaluate: Evaluator | None = None,
    ratio_threshold: float = 0.5,
    cut: int | None = None,
) -> Individual:
    """One-point crossover at a random document (or at ``cut``)."""
    p1, p2 = parent1.runs, parent2.runs
    if parent1.fit.n != parent2.fit.n:
        raise ShapeError("parents cover different numbers of gaps")
    n = parent1.fit.n
    if k is None:
        k = max(max(parent1.fit.states), max(parent2.fit.states)) + 1
    prob = _Problem(gaps, k, ratio_threshold)
    if n < 2:
        return parent1
    if cut is None:
        cut = _rand_int(rng, 1, n)
    elif not 1 <= cut <= n - 1:
        raise ValueError(f"crossover document must lie in [1, {n - 1}], got {cut}")
    runs = _crossover_runs(p1, p2, cut, prob, rng)
    return Individual(_trusted_fit(runs), evaluate(runs) if evaluate else math.nan)


def mutate(
    ind: Individual,
    k: int,
    gaps: GapSequence,
    rng: np.random.Generator,
    evaluate: Evaluator | None = None,
    ratio_threshold: float = 0.5,
    last_run_bias: float | None = None,
    variant: int | None = None,
) -> Individual:
    """Mutated copy of ``ind``; ``variant`` (1-3) forces one operator."""
    prob = _Problem(gaps, k, ratio_threshold)
    if variant is not None and variant not in (1, 2, 3):
        raise ValueError(f"mutation variant must be 1, 2 or 3, got {variant}")
    runs = _mutate_runs(ind.runs, prob, rng, last_run_bias, None if variant is None else variant - 1)
    return Individual(_trusted_fit(runs), evaluate(runs) if evaluate else math.nan)


# ---------------------------------------------------------------------------
# Main loop


def _check_population(pop: list[Runs], fitness: list[float], prob: _Problem, evaluate: Evaluator) -> None:
    for runs, f in zip(pop, fitness):
        Fit(runs).check(prob.k, prob.n)
        assert math.isclose(evaluate(runs), f, rel_tol=1e-12, abs_tol=1e-9)


def _evolve_population(
    pop: list[Runs],
    prob: _Problem,
    evaluate: Evaluator,
    config: EAConfig,
    rng: np.random.Generator,
) -> tuple[Runs, RunStats]:
    started = time.perf_counter()
    size = len(pop)
    fitness = [evaluate(r) for r in pop]
    n_crossovers = int(round(size * config.crossover_rate))

    def tournament() -> int:
        i = _rand_int(rng, 0, size)
        j = _rand_int(rng, 0, size)
        return i if fitness[i] <= fitness[j] else j

    avg = math.fsum(fitness) / size
    trace = [(0, min(fitness), avg)]
    streak = 0
    converged = False
    generation = 0
    for generation in range(1, config.max_generations + 1):
        if prob.n >= 2:
            for _ in range(n_crossovers):
                i = tournament()
                j = tournament()
                if i == j:
                    continue
                cut = _rand_int(rng, 1, prob.n)
                o1 = _crossover_runs(pop[i], pop[j], cut, prob, rng)
                o2 = _crossover_runs(pop[j], pop[i], cut, prob, rng)
                f1, f2 = evaluate(o1), evaluate(o2)
                child, fc = (o1, f1) if f1 <= f2 else (o2, f2)
                worst = i if fitness[i] >= fitness[j] else j
                if fc < fitness[worst]:
                    pop[worst] = child
                    fitness[worst] = fc
        draws = rng.random(size)
        for idx in np.flatnonzero(draws < config.mutation_rate).tolist():
            mutant = _mutate_runs(pop[idx], prob, rng)
            fm = evaluate(mutant)
            if fm <= fitness[idx]:
                pop[idx] = mutant
                fitness[idx] = fm
        if config.check_invariants:
            _check_population(pop, fitness, prob, evaluate)
        prev_avg, avg = avg, math.fsum(fitness) / size
        trace.append((generation, min(fitness), avg))
        if abs(prev_avg - avg) <= config.convergence_threshold * max(abs(prev_avg), 1e-300):
            streak += 1
            if streak >= config.convergence_window:
                converged = True
                break
        else:
            streak = 0
    best = min(range(size), key=lambda i: (fitness[i], i))
    arr = np.asarray(fitness)
    stats = RunStats(
        best_cost=fitness[best],
        average_cost=float(arr.mean()),
        std_dev_cost=float(arr.std()),
        generations_used=generation,
        wall_time=time.perf_counter() - started,
        converged=converged,
        trace=trace,
    )
    return pop[best], stats


def _finish(runs: Runs, stats: RunStats, a: Automaton, cf: CostFunctionId, gaps: GapSequence) -> tuple[Fit, RunStats]:
    from .model import total_cost

    fit = Fit(runs)
    stats.best_cost = total_cost(a, cf, fit, gaps)
    stats.average_cost = max(stats.average_cost, stats.best_cost)
    return fit, stats


def evolve(gaps: GapSequence, automaton: Automaton, cf: CostFunctionId, config: EAConfig = EAConfig()) -> tuple[Fit, RunStats]:
    """Search for a minimum-cost fit; deterministic given ``config.rng_seed``."""
    started = time.perf_counter()
    rng = np.random.default_rng(config.rng_seed)
    prob = _Problem(gaps, automaton.k, config.gap_ratio_threshold)
    evaluate = Evaluator(automaton, cf, gaps)
    pop = [_heuristic_runs(prob, rng) for _ in range(config.population_size)]
    runs, stats = _evolve_population(pop, prob, evaluate, config, rng)
    stats.wall_time = time.perf_counter() - started
    return _finish(runs, stats, automaton, cf, gaps)


def evolve_from(
    seed_runs: Runs,
    gaps: GapSequence,
    automaton: Automaton,
    cf: CostFunctionId,
    config: EAConfig,
    last_run_bias: float = 0.5,
) -> tuple[Fit, RunStats]:
    """Evolve from the seed plus ``population_size - 1`` single mutants of it."""
    started = time.perf_counter()
    rng = np.random.default_rng(config.rng_seed)
    prob = _Problem(gaps, automaton.k, config.gap_ratio_threshold)
    evaluate = Evaluator(automaton, cf, gaps)
    seed_runs = tuple(seed_runs)
    pop = [seed_runs] + [
        _mutate_runs(seed_runs, prob, rng, last_run_bias) for _ in range(config.population_size - 1)
    ]
    runs, stats = _evolve_population(pop, prob, evaluate, config, rng)
    stats.wall_time = time.perf_counter() - started
    return _finish(runs, stats, automaton, cf, gaps)


def aggregate(results: Sequence[RunStats]) -> RunStats:
    """Best, mean and population standard deviation of best costs over runs.

    ``wall_time`` and ``generations_used`` are those of the best run.
    """
    if not results:
        raise ValueError("no runs to aggregate")
    costs = np.array([r.best_cost for r in results])
    best = int(np.argmin(costs))
    return RunStats(
        best_cost=float(costs[best]),
        average_cost=max(float(costs.mean()), float(costs[best])),
        std_dev_cost=float(costs.std()),
        generations_used=results[best].generations_used,
        wall_time=results[best].wall_time,
        runs=len(results),
        converged=results[best].converged,
        trace=results[best].trace,
    )


def write_trace(stats: RunStats, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# generation\tbest_cost\tavg_cost\n")
        for g, best, avg in stats.trace:
            fh.write(f"{g}\t{best!r}\t{avg!r}\n")
