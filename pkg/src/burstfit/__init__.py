"""Burst detection on document arrival streams.

Fits a sequence of frequency states to the inter-arrival gaps of a stream,
either exactly (Viterbi) or with a steady-state evolutionary algorithm, and
supports incremental trend queries and seeded refits for growing streams.
"""

from .stream import (
    BernoulliSegmentSpec,
    DocumentStream,
    FixedGapIntervalSpec,
    GapSequence,
    StreamError,
    gaps_from_stream,
    generate_bernoulli,
    generate_fixed_gap,
    read_stream,
    write_stream,
)
from .model import (
    Automaton,
    CostFunctionId,
    Fit,
    ModelError,
    Run,
    build_automaton,
    compact,
    expand,
    frequency_curve,
    gap_cost,
    normalize,
    total_cost,
    transition_cost,
)
from .dp import brute_force, viterbi
from .ea import EAConfig, Individual, RunStats, evolve
from .incremental import TrendUpdate, local_trend_update, seeded_refit

__all__ = [
    "Automaton",
    "BernoulliSegmentSpec",
    "CostFunctionId",
    "DocumentStream",
    "EAConfig",
    "Fit",
    "FixedGapIntervalSpec",
    "GapSequence",
    "Individual",
    "ModelError",
    "Run",
    "RunStats",
    "StreamError",
    "TrendUpdate",
    "brute_force",
    "build_automaton",
    "compact",
    "evolve",
    "expand",
    "frequency_curve",
    "gap_cost",
    "gaps_from_stream",
    "generate_bernoulli",
    "generate_fixed_gap",
    "local_trend_update",
    "normalize",
    "read_stream",
    "seeded_refit",
    "total_cost",
    "transition_cost",
    "viterbi",
    "write_stream",
]
