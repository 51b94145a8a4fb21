"""Command-line interface.

Subcommands::

    generate  SPEC --kind fixed|bernoulli [--seed N] -o STREAM
    fit       STREAM [--algo viterbi|ea|brute] -o FIT
    compare   STREAM --state-counts 5,10,15 [--runs R] -o TABLE
    trend     STREAM (--fit FIT | --state Q) --gap X
    refit     PREV_FIT EXTENDED_STREAM -o FIT
    curve     STREAM FIT -o CURVE

Files are UTF-8 TSV with ``#`` header lines.  Summaries go to stdout, errors
to stderr; the exit status is non-zero whenever the requested file was not
written.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import dp, ea
from .incremental import local_trend_update, seeded_refit
from .model import (
    VARIANTS,
    CostFunctionId,
    ModelError,
    ShapeError,
    build_automaton,
    frequency_curve,
    read_fit,
    total_cost,
    write_curve,
    write_fit,
)
from .stream import (
    StreamError,
    gaps_from_stream,
    generate_bernoulli,
    generate_fixed_gap,
    read_bernoulli_spec,
    read_fixed_gap_spec,
    read_stream,
    write_stream,
)

DEFAULT_STATES = 10


class _AtomicPath:
    """Write to a sibling temp file and move it into place on success."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.tmp = self.path.with_name(f".{self.path.name}.tmp")

    def __enter__(self) -> Path:
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            os.replace(self.tmp, self.path)
        elif self.tmp.exists():
            self.tmp.unlink()
        return False


# ---------------------------------------------------------------------------
# argument helpers


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _non_negative_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _state_list(text: str) -> list[int]:
    try:
        values = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 2 for v in values):
        raise argparse.ArgumentTypeError("state counts must be integers >= 2")
    return values


def _cost_name(text: str) -> str:
    name = text.strip().lower().replace("-", "_")
    if name not in VARIANTS:
        raise argparse.ArgumentTypeError(f"unknown cost {text!r}; choose from a-h or two-state")
    return name


def _add_model_flags(p: argparse.ArgumentParser, states: bool = True) -> None:
    g = p.add_argument_group("model")
    if states:
        g.add_argument("--states", type=int, default=DEFAULT_STATES, help="number of automaton states k (default %(default)s)")
    g.add_argument("--alpha-max", type=_positive_float, default=1.0, help="rate of the top state (default %(default)s)")
    g.add_argument("--gamma", type=_positive_float, default=1.0, help="transition penalty weight (default %(default)s)")
    g.add_argument("--cost", type=_cost_name, default="g", help="transition cost a-h or two-state (default g)")
    g.add_argument("--p", type=float, default=None, help="state change probability for the two-state cost")


def _add_ea_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("evolutionary algorithm")
    g.add_argument("--pop", type=_positive_int, default=200)
    g.add_argument("--gens", type=int, default=200)
    g.add_argument("--xover", type=_fraction, default=0.40)
    g.add_argument("--mut", type=_fraction, default=0.05)
    g.add_argument("--conv-threshold", type=_positive_float, default=1e-6)
    g.add_argument("--conv-window", type=_positive_int, default=20)
    g.add_argument("--seed", type=int, default=0)


def _cost_fn(args) -> CostFunctionId:
    if args.cost == "two_state":
        if args.p is None:
            raise ModelError("--p is required with --cost two-state")
        return CostFunctionId("two_state", args.p)
    return CostFunctionId(args.cost)


def _ea_config(args, seed: int | None = None) -> ea.EAConfig:
    return ea.EAConfig(
        population_size=args.pop,
        max_generations=args.gens,
        crossover_rate=args.xover,
        mutation_rate=args.mut,
        convergence_threshold=args.conv_threshold,
        convergence_window=args.conv_window,
        rng_seed=args.seed if seed is None else seed,
    )


def _load(stream_path, args, k: int | None = None):
    stream = read_stream(stream_path)
    gaps = gaps_from_stream(stream)
    a = build_automaton(gaps.n, gaps.T, k or args.states, args.alpha_max, args.gamma)
    return stream, gaps, a


def _run_ea(gaps, a, cf, args, runs: int):
    results = []
    best_fit = None
    for r in range(runs):
        fit, stats = ea.evolve(gaps, a, cf, _ea_config(args, args.seed + r))
        if best_fit is None or stats.best_cost < min(x.best_cost for x in results):
            best_fit = fit
        results.append(stats)
    return best_fit, results


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    if args.kind == "fixed":
        stream = generate_fixed_gap(read_fixed_gap_spec(args.spec))
    else:
        stream = generate_bernoulli(read_bernoulli_spec(args.spec), args.seed)
    with _AtomicPath(args.out) as tmp:
        write_stream(stream, tmp)
    print(f"wrote {len(stream)} timestamps to {args.out}")
    return 0


def cmd_fit(args) -> int:
    _, gaps, a = _load(args.stream, args)
    cf = _cost_fn(args)
    stats = None
    if args.algo == "viterbi":
        t0 = time.perf_counter()
        fit, cost = dp.viterbi(a, cf, gaps)
        elapsed = time.perf_counter() - t0
    elif args.algo == "brute":
        t0 = time.perf_counter()
        fit, cost = dp.brute_force(a, cf, gaps)
        elapsed = time.perf_counter() - t0
    else:
        fit, results = _run_ea(gaps, a, cf, args, args.runs)
        stats = ea.aggregate(results)
        cost = stats.best_cost
        elapsed = stats.wall_time
    with _AtomicPath(args.out) as tmp:
        write_fit(fit, a, tmp)
    if stats is not None and args.trace:
        with _AtomicPath(args.trace) as tmp:
            ea.write_trace(stats, tmp)
    print(f"algo\t{args.algo}")
    print(f"states\t{a.k}")
    print(f"cost\t{cost!r}")
    print(f"runs_in_fit\t{len(fit)}")
    print(f"time\t{elapsed:.3f}")
    if stats is not None:
        print(f"ea_runs\t{stats.runs}")
        print(f"average_cost\t{stats.average_cost!r}")
        print(f"std_dev_cost\t{stats.std_dev_cost!r}")
        print(f"generations\t{stats.generations_used}")
        print(f"converged\t{stats.converged}")
    return 0


def cmd_compare(args) -> int:
    stream = read_stream(args.stream)
    gaps = gaps_from_stream(stream)
    cf = _cost_fn(args)
    rows = []
    for k in args.state_counts:
        a = build_automaton(gaps.n, gaps.T, k, args.alpha_max, args.gamma)
        t0 = time.perf_counter()
        _, vcost = dp.viterbi(a, cf, gaps)
        vtime = time.perf_counter() - t0
        _, results = _run_ea(gaps, a, cf, args, args.runs)
        st = ea.aggregate(results)
        rows.append((k, vtime, vcost, st.wall_time, st.best_cost, st.average_cost, st.std_dev_cost))
        print(f"k={k}\tviterbi={vcost:.3f}\tea_best={st.best_cost:.3f}\tea_avg={st.average_cost:.3f}", flush=True)

    def t(v: float) -> str:
        return "NA" if args.no_timing else f"{v:.3f}"

    with _AtomicPath(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(f"# stream={args.stream} n={gaps.n} T={gaps.T!r} cost={cf} runs={args.runs}\n")
            fh.write("# states\tviterbi_time\tviterbi_cost\tea_time\tea_cost\tea_avg_cost\tea_std_dev\n")
            for k, vt, vc, et, ec, eavg, esd in rows:
                fh.write(f"{k}\t{t(vt)}\t{vc:.6f}\t{t(et)}\t{ec:.6f}\t{eavg:.6f}\t{esd:.6f}\n")
    return 0


def cmd_trend(args) -> int:
    _, gaps, a = _load(args.stream, args)
    if args.fit is not None:
        fit = read_fit(args.fit)
        old = fit.runs[-1].state
    else:
        old = args.state
    if not 0 <= old < a.k:
        raise _FlagError(f"state {old} out of range for a {a.k}-state automaton")
    update = local_trend_update(a, _cost_fn(args), old, args.gap)
    print(update.format())
    return 0


def cmd_refit(args) -> int:
    prev = read_fit(args.prev_fit)
    _, gaps, a = _load(args.stream, args)
    if prev.n > gaps.n:
        raise ShapeError(f"previous fit covers {prev.n} gaps but the extended stream has only {gaps.n}")
    cf = _cost_fn(args)
    fit, stats = seeded_refit(prev, gaps, a, cf, _ea_config(args))
    with _AtomicPath(args.out) as tmp:
        write_fit(fit, a, tmp)
    if args.trace:
        with _AtomicPath(args.trace) as tmp:
            ea.write_trace(stats, tmp)
    print(f"cost\t{stats.best_cost!r}")
    print(f"generations\t{stats.generations_used}")
    print(f"converged\t{stats.converged}")
    print(f"time\t{stats.wall_time:.3f}")
    return 0


def cmd_curve(args) -> int:
    stream, gaps, a = _load(args.stream, args)
    fit = read_fit(args.fit)
    curve = frequency_curve(a, fit, stream)
    with _AtomicPath(args.out) as tmp:
        write_curve(curve, tmp)
    print(f"cost\t{total_cost(a, _cost_fn(args), fit, gaps)!r}")
    print(f"steps\t{len(curve)}")
    return 0


class _FlagError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="burstfit", description="Fit frequency states to document arrival streams.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate an artificial stream from a spec file")
    p.add_argument("spec")
    p.add_argument("--kind", choices=("fixed", "bernoulli"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a stream and write the run table")
    p.add_argument("stream")
    p.add_argument("--algo", choices=("viterbi", "ea", "brute"), default="viterbi")
    p.add_argument("--runs", type=_positive_int, default=1, help="EA repetitions with seeds seed..seed+runs-1")
    p.add_argument("--trace", help="write the per-generation EA trace of the best run here")
    p.add_argument("-o", "--out", required=True)
    _add_model_flags(p)
    _add_ea_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="tabulate Viterbi against repeated EA runs")
    p.add_argument("stream")
    p.add_argument("--state-counts", type=_state_list, default=[5, 10, 15, 20, 25])
    p.add_argument("--runs", type=_positive_int, default=5)
    p.add_argument("--no-timing", action="store_true", help="write NA instead of wall times")
    p.add_argument("-o", "--out", required=True)
    _add_model_flags(p, states=False)
    _add_ea_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trend", help="classify the trend implied by one new gap")
    p.add_argument("stream", help="stream the automaton is built for")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fit", help="fit whose last run gives the current state")
    src.add_argument("--state", type=int, help="current state")
    p.add_argument("--gap", type=_non_negative_float, required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("refit", help="refit an extended stream seeded by a previous fit")
    p.add_argument("prev_fit")
    p.add_argument("stream", help="the extended stream")
    p.add_argument("--trace")
    p.add_argument("-o", "--out", required=True)
    _add_model_flags(p)
    _add_ea_flags(p)
    p.set_defaults(func=cmd_refit)

    p = sub.add_parser("curve", help="write the step curve (time_start, time_end, rate) of a fit")
    p.add_argument("stream")
    p.add_argument("fit")
    p.add_argument("-o", "--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_curve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _FlagError as exc:
        parser.error(str(exc))
    except (StreamError, ModelError, dp.InstanceTooLarge, ValueError, OSError) as exc:
        print(f"burstfit: error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
