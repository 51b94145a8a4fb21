"""Exact minimum-cost state sequences: Viterbi and exhaustive enumeration."""

from __future__ import annotations

import numpy as np

from .model import Automaton, CostFunctionId, Fit, ShapeError, compact, dense_cost, transition_matrix
from .stream import GapSequence

BRUTE_FORCE_LIMIT = 10**7


class InstanceTooLarge(ValueError):
    pass


def _check(a: Automaton, gaps: GapSequence) -> np.ndarray:
    x = gaps.gaps if isinstance(gaps, GapSequence) else np.asarray(gaps, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ShapeError("need at least one gap")
    return x


def viterbi(a: Automaton, cf: CostFunctionId, gaps: GapSequence) -> tuple[Fit, float]:
    """Globally optimal fit by dynamic programming, O(n k^2).

    Ties between predecessors go to the lowest state index, as do ties
    between final states.
    """
    x = _check(a, gaps)
    n, k = x.size, a.k
    emission = a.emission_costs(x)
    tau = transition_matrix(cf, a)
    back = np.empty((n, k), dtype=np.int32)
    back[0] = 0
    cost = tau[0] + emission[0]
    cols = np.arange(k)
    for t in range(1, n):
        cand = cost[:, None] + tau
        bp = np.argmin(cand, axis=0)
        back[t] = bp
        cost = cand[bp, cols] + emission[t]
    state = int(np.argmin(cost))
    best = float(cost[state])
    dense = np.empty(n, dtype=np.int64)
    for t in range(n - 1, -1, -1):
        dense[t] = state
        state = int(back[t, state])
    return compact(dense), best


def brute_force(a: Automaton, cf: CostFunctionId, gaps: GapSequence) -> tuple[Fit, float]:
    """Score every one of the ``k**n`` state sequences explicitly.

    Test oracle only.  Ties resolve to the lexicographically smallest
    sequence.
    """
    x = _check(a, gaps)
    n, k = x.size, a.k
    if k**n > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{k}**{n} sequences exceeds the brute-force limit of {BRUTE_FORCE_LIMIT}")
    emission = a.emission_costs(x)
    tau = transition_matrix(cf, a)
    # costs[q_0, ..., q_t] for every prefix, laid out in lexicographic order
    costs = tau[0] + emission[0]
    for t in range(1, n):
        costs = costs[..., :, None] + tau + emission[t]
    flat = int(np.argmin(costs.ravel()))
    dense = np.unravel_index(flat, (k,) * n)
    dense = [int(q) for q in dense]
    return compact(dense), dense_cost(a, cf, dense, gaps)
