import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from burstfit import (
    CostFunctionId,
    EAConfig,
    Fit,
    build_automaton,
    gaps_from_stream,
    local_trend_update,
    seeded_refit,
    total_cost,
    viterbi,
)
from burstfit.incremental import DOWN, FLAT, UP, TrendUpdate, classify_trend, seed_individual
from burstfit.model import ShapeError, VARIANTS

ALL_CFS = [CostFunctionId(v) for v in VARIANTS[:-1]] + [CostFunctionId("two_state", 0.2)]


def scan(a, cf, old, x):
    """Independent exhaustive scan written from the cost formulas."""
    costs = []
    for j in range(a.k):
        d = j - old
        if cf.variant == "two_state":
            tau = 0.0 if d == 0 else math.log((1 - cf.p) / cf.p)
        elif d == 0 or (cf.variant in "aceg" and d < 0):
            tau = 0.0
        elif cf.variant in "ab":
            tau = abs(d) * a.gamma * math.log(a.n)
        elif cf.variant in "cd":
            tau = a.gamma * math.log(abs(d))
        elif cf.variant in "ef":
            tau = a.gamma * math.sqrt(abs(d))
        else:
            tau = abs(d) * a.gamma / math.log(a.k)
        alpha = a.alpha_0 * a.s**j
        costs.append(tau - math.log(alpha) + alpha * x)
    best = min(costs)
    ties = [j for j, c in enumerate(costs) if c <= best + 1e-12 * max(1.0, abs(best))]
    return min(ties, key=lambda j: (abs(j - old), j)), ties


def test_trend_classification():
    assert classify_trend(12, 0) == DOWN
    assert classify_trend(3, 4) == UP
    assert classify_trend(0, 0) == FLAT
    assert TrendUpdate(3, 4).format() == "3\t4\tUP"


def test_gap_at_mean_is_flat():
    a = build_automaton(100, 1000.0, 11, 1.0)
    for cf in map(CostFunctionId, "aceg"):
        for old in range(a.k):
            u = local_trend_update(a, cf, old, 1 / a.alphas[old])
            assert u.new_state == old and u.trend == FLAT


def test_short_gap_does_not_overcome_inertia():
    a = build_automaton(100, 1000.0, 11, 1.0)
    cf = CostFunctionId("g")
    costs = [j / math.log(11) - math.log(0.1 * 10 ** (j / 10)) + 0.1 * 10 ** (j / 10) for j in range(11)]
    assert int(np.argmin(costs)) == 0
    assert local_trend_update(a, cf, 0, 1.0).new_state == 0


def test_long_gap_drops_state():
    a = build_automaton(100, 1000.0, 11, 1.0)
    u = local_trend_update(a, CostFunctionId("g"), 8, 500.0)
    assert u.new_state == 0 and u.trend == DOWN


@given(st.integers(0, 2**32 - 1), st.sampled_from(ALL_CFS))
def test_local_update_is_exhaustive_scan(seed, cf):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 30))
    n = int(rng.integers(1, 10**5))
    T = float(rng.uniform(1.0, 1e6))
    a = build_automaton(n, T, k, (n / T) * float(rng.uniform(1.5, 1e3)), float(rng.uniform(0.1, 3)))
    old = int(rng.integers(0, k))
    x = float(np.exp(rng.uniform(-8, 8)))
    expected, ties = scan(a, cf, old, x)
    got = local_trend_update(a, cf, old, x).new_state
    if len(ties) == 1:
        assert got == expected
    else:
        assert got in ties


def test_local_update_validates_inputs():
    a = build_automaton(10, 100.0, 4, 1.0)
    with pytest.raises(ValueError):
        local_trend_update(a, CostFunctionId("g"), 4, 1.0)
    with pytest.raises(ValueError):
        local_trend_update(a, CostFunctionId("g"), 0, -1.0)


# ---------------------------------------------------------------------------
# seeded refit


def test_seed_individual_extends_last_run():
    seed = seed_individual(Fit([(0, 0, 4), (3, 5, 9)]), 15)
    assert Fit(seed) == Fit([(0, 0, 4), (3, 5, 14)])
    with pytest.raises(ShapeError):
        seed_individual(Fit([(0, 0, 9)]), 5)


def test_seeded_refit_rejects_non_prefix_fit(step_streams):
    gaps = gaps_from_stream(step_streams["mixed"].prefix(100))
    a = build_automaton(gaps.n, gaps.T, 5)
    with pytest.raises(ShapeError):
        seeded_refit(Fit([(0, 0, 149)]), gaps, a, CostFunctionId("g"))


def test_empty_extension_keeps_optimal_seed(step_streams):
    gaps = gaps_from_stream(step_streams["up_down"])
    a = build_automaton(gaps.n, gaps.T, 8)
    cf = CostFunctionId("g")
    opt, cost = viterbi(a, cf, gaps)
    fit, stats = seeded_refit(opt, gaps, a, cf, EAConfig(population_size=40, max_generations=30, rng_seed=1))
    assert stats.best_cost == pytest.approx(cost, rel=1e-12)
    assert stats.best_cost <= total_cost(a, cf, opt, gaps)


def test_seeded_refit_never_worse_than_seed(noisy_step_stream):
    full = noisy_step_stream.prefix(3000)
    m = 2900
    prev_gaps = gaps_from_stream(full.prefix(m))
    cf = CostFunctionId("g")
    prev, _ = viterbi(build_automaton(prev_gaps.n, prev_gaps.T, 6), cf, prev_gaps)
    gaps = gaps_from_stream(full)
    a = build_automaton(gaps.n, gaps.T, 6)
    seed_cost = total_cost(a, cf, Fit(seed_individual(prev, gaps.n)), gaps)
    fit, stats = seeded_refit(prev, gaps, a, cf, EAConfig(population_size=30, max_generations=20, rng_seed=5))
    assert stats.best_cost <= seed_cost
    assert fit.n == gaps.n


def test_seeded_refit_corrects_wrong_last_state(step_streams):
    # the stream ends in a dense step; seed it with a far too low last state
    stream = step_streams["ascending"]
    gaps = gaps_from_stream(stream)
    a = build_automaton(gaps.n, gaps.T, 8)
    cf = CostFunctionId("g")
    opt, cost = viterbi(a, cf, gaps)
    m = gaps.n - 200
    wrong = Fit(opt.runs[:-1] + ((0, opt.runs[-1].first_gap, m - 1),))
    fit, stats = seeded_refit(wrong, gaps, a, cf, EAConfig(population_size=60, max_generations=100, rng_seed=2))
    assert fit.runs[-1].state == opt.runs[-1].state
    assert stats.best_cost == pytest.approx(cost, rel=1e-9)
    assert classify_trend(0, fit.runs[-1].state) == UP


def test_seeded_refit_converges_faster_than_cold_start(noisy_step_stream):
    from burstfit import evolve

    stream = noisy_step_stream.prefix(5000)
    m = 4950
    cf = CostFunctionId("g")
    prev_gaps = gaps_from_stream(stream.prefix(m))
    prev, _ = viterbi(build_automaton(prev_gaps.n, prev_gaps.T, 8), cf, prev_gaps)
    gaps = gaps_from_stream(stream)
    a = build_automaton(gaps.n, gaps.T, 8)
    _, best = viterbi(a, cf, gaps)
    cfg = EAConfig(population_size=100, max_generations=600, mutation_rate=0.10, rng_seed=4)
    _, seeded = seeded_refit(prev, gaps, a, cf, cfg)
    _, cold = evolve(gaps, a, cf, cfg)
    assert seeded.best_cost <= 1.005 * best
    assert seeded.generations_used < cold.generations_used
