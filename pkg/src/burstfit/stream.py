"""Document arrival streams, their gap sequences, and artificial generators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class StreamError(ValueError):
    """Invalid stream, spec, or stream file."""


class ParseError(StreamError):
    def __init__(self, message: str, lineno: int | None = None, path: str | None = None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where = f"{where}{lineno}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class OrderError(StreamError):
    """Timestamps decrease somewhere in the input."""


@dataclass(frozen=True)
class DocumentStream:
    """Arrival times of the documents of one topic, in time units.

    Construction only checks ordering; streams shorter than two documents
    are representable (a generator may emit them) but rejected by
    :func:`gaps_from_stream`.
    """

    timestamps: tuple[float, ...]

    def __init__(self, timestamps: Iterable[float]):
        ts = tuple(float(t) for t in timestamps)
        for i in range(1, len(ts)):
            if ts[i] < ts[i - 1]:
                raise OrderError(
                    f"timestamps must be non-decreasing: t[{i}]={ts[i]!r} < t[{i - 1}]={ts[i - 1]!r}"
                )
        if any(not math.isfinite(t) for t in ts):
            raise StreamError("timestamps must be finite")
        object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def span(self) -> float:
        if not self.timestamps:
            return 0.0
        return self.timestamps[-1] - self.timestamps[0]

    def prefix(self, n_gaps: int) -> "DocumentStream":
        """The stream truncated to its first ``n_gaps`` gaps."""
        return DocumentStream(self.timestamps[: n_gaps + 1])


@dataclass(frozen=True)
class GapSequence:
    """Inter-arrival gaps ``x_1..x_n`` plus the total span ``T``."""

    gaps: np.ndarray
    T: float

    def __post_init__(self):
        gaps = np.asarray(self.gaps, dtype=float)
        if gaps.ndim != 1 or gaps.size < 1:
            raise StreamError("a gap sequence needs at least one gap")
        if np.any(gaps < 0) or not np.all(np.isfinite(gaps)):
            raise StreamError("gaps must be finite and non-negative")
        if not self.T > 0:
            raise StreamError(f"degenerate span T={self.T!r}")
        gaps = gaps.copy()
        gaps.flags.writeable = False
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "T", float(self.T))

    @property
    def n(self) -> int:
        return int(self.gaps.size)

    def __len__(self) -> int:
        return self.n

    @classmethod
    def from_gaps(cls, gaps: Sequence[float]) -> "GapSequence":
        """Build from raw gaps, taking ``T`` as their sum."""
        arr = np.asarray(gaps, dtype=float)
        return cls(arr, math.fsum(arr))


def gaps_from_stream(stream: DocumentStream) -> GapSequence:
    ts = stream.timestamps
    if len(ts) < 2:
        raise StreamError(f"a stream needs at least 2 timestamps, got {len(ts)}")
    T = ts[-1] - ts[0]
    if T <= 0:
        raise StreamError("degenerate span: first and last timestamps coincide")
    arr = np.asarray(ts, dtype=float)
    return GapSequence(np.diff(arr), T)


# ---------------------------------------------------------------------------
# Artificial stream generators


@dataclass(frozen=True)
class FixedGapIntervalSpec:
    """Intervals of ``count`` documents separated by a constant ``gap``."""

    intervals: tuple[tuple[int, float], ...]

    def __init__(self, intervals: Iterable[tuple[int, float]]):
        items = []
        for count, gap in intervals:
            if int(count) != count or count < 1:
                raise StreamError(f"interval document count must be a positive integer, got {count!r}")
            if not gap > 0 or not math.isfinite(gap):
                raise StreamError(f"interval gap must be positive, got {gap!r}")
            items.append((int(count), float(gap)))
        object.__setattr__(self, "intervals", tuple(items))


@dataclass(frozen=True)
class BernoulliSegmentSpec:
    """Contiguous integer time segments with a per-unit arrival probability."""

    segments: tuple[tuple[int, int, float], ...]

    def __init__(self, segments: Iterable[tuple[int, int, float]]):
        items = []
        prev_end = None
        for t_start, t_end, freq in segments:
            if int(t_start) != t_start or int(t_end) != t_end:
                raise StreamError("segment bounds must be integers")
            t_start, t_end = int(t_start), int(t_end)
            if t_end < t_start:
                raise StreamError(f"segment [{t_start}, {t_end}] is empty")
            if prev_end is not None and t_start != prev_end + 1:
                raise StreamError(
                    f"segments must be contiguous: segment starting at {t_start} follows one ending at {prev_end}"
                )
            if not 0.0 <= freq <= 1.0:
                raise StreamError(f"segment frequency must lie in [0, 1], got {freq!r}")
            items.append((t_start, t_end, float(freq)))
            prev_end = t_end
        object.__setattr__(self, "segments", tuple(items))


def generate_fixed_gap(spec: FixedGapIntervalSpec) -> DocumentStream:
    """Concatenate the intervals of ``spec`` starting at time 0.

    The first document of each later interval arrives one of *its own* gaps
    after the last document of the previous interval.
    """
    if not spec.intervals:
        raise StreamError("empty fixed-gap spec")
    times: list[float] = []
    t = 0.0
    for j, (count, gap) in enumerate(spec.intervals):
        first = 0 if j == 0 else 1
        # multiply from the interval origin so long intervals do not drift
        base = t
        for m in range(first, count + first):
            times.append(base + m * gap)
        t = times[-1]
    return DocumentStream(times)


def generate_bernoulli(spec: BernoulliSegmentSpec, rng_seed: int) -> DocumentStream:
    """Per time unit, emit a document with the segment's probability."""
    rng = np.random.default_rng(rng_seed)
    times: list[np.ndarray] = []
    for t_start, t_end, freq in spec.segments:
        units = np.arange(t_start, t_end + 1)
        hits = rng.random(units.size) < freq
        times.append(units[hits])
    if not times:
        return DocumentStream(())
    return DocumentStream(np.concatenate(times).tolist())


#: the random-gap stream used to compare cost functions
TABLE1_SPEC = BernoulliSegmentSpec(
    [
        (0, 1000, 0.002),
        (1001, 2000, 0.89),
        (2001, 3000, 0.004),
        (3001, 4000, 0.9),
        (4001, 5000, 0.001),
        (5001, 6000, 0.99),
    ]
)


# ---------------------------------------------------------------------------
# File formats


def _data_lines(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _format_time(t: float) -> str:
    if t.is_integer() and abs(t) < 2**53:
        return str(int(t))
    return repr(t)


def read_stream(path: str | Path) -> DocumentStream:
    """Read one timestamp per line; ``#`` lines and blank lines are skipped."""
    times: list[float] = []
    for lineno, line in _data_lines(path):
        try:
            t = float(line)
        except ValueError:
            raise ParseError(f"not a timestamp: {line!r}", lineno, str(path)) from None
        if not math.isfinite(t):
            raise ParseError(f"timestamp must be finite: {line!r}", lineno, str(path))
        if times and t < times[-1]:
            raise OrderError(f"{path}:{lineno}: timestamp {line} is smaller than the previous one")
        times.append(t)
    return DocumentStream(times)


def write_stream(stream: DocumentStream, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in stream.timestamps:
            fh.write(_format_time(t))
            fh.write("\n")


def read_fixed_gap_spec(path: str | Path) -> FixedGapIntervalSpec:
    """One ``count gap`` pair per line."""
    intervals = []
    for lineno, line in _data_lines(path):
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected 'count gap', got {len(fields)} fields", lineno, str(path))
        try:
            count = int(fields[0])
            gap = float(fields[1])
        except ValueError:
            raise ParseError(f"malformed interval {line!r}", lineno, str(path)) from None
        try:
            intervals.append(FixedGapIntervalSpec([(count, gap)]).intervals[0])
        except StreamError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    return FixedGapIntervalSpec(intervals)


def read_bernoulli_spec(path: str | Path) -> BernoulliSegmentSpec:
    """One ``t_start t_end frequency`` triple per line."""
    segments = []
    lines = []
    for lineno, line in _data_lines(path):
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"expected 't_start t_end frequency', got {len(fields)} fields", lineno, str(path))
        try:
            seg = (int(fields[0]), int(fields[1]), float(fields[2]))
        except ValueError:
            raise ParseError(f"malformed segment {line!r}", lineno, str(path)) from None
        segments.append(seg)
        lines.append(lineno)
    # validate incrementally so the error points at the offending line
    for i in range(len(segments)):
        try:
            BernoulliSegmentSpec(segments[: i + 1])
        except StreamError as exc:
            raise ParseError(str(exc), lines[i], str(path)) from None
    return BernoulliSegmentSpec(segments)


def write_fixed_gap_spec(spec: FixedGapIntervalSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for count, gap in spec.intervals:
            fh.write(f"{count} {gap!r}\n")


def write_bernoulli_spec(spec: BernoulliSegmentSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t_start, t_end, freq in spec.segments:
            fh.write(f"{t_start} {t_end} {freq!r}\n")
