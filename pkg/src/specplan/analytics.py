"""Closed-form latency/token/concurrency analysis and event-log metrics.

Latency model: between two consecutive breaking points, target calls launch
staggered by the approximation step times (plus execution), and the segment
lasts until its slowest target call finishes. Token totals and concurrency
are measured from the event log, which is the ground truth the closed forms
describe. All duration arithmetic happens in integer microseconds so virtual
runs compare exactly.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from specplan.engine.events import EventLog, EventType
from specplan.errors import InvalidBreaks


def _us(seconds: float) -> int:
    return round(seconds * 1_000_000)


@dataclass(frozen=True)
class StepProfile:
    """Per-step timing and token parameters for one plan step."""

    time_a: float
    time_t: float
    exec: float = 0.0
    tok_a: int = 0
    tok_t: int = 0

    def __post_init__(self) -> None:
        if min(self.time_a, self.time_t, self.exec) < 0 or min(self.tok_a, self.tok_t) < 0:
            raise ValueError("profile fields must be >= 0")


def constant_profiles(
    n: int, *, time_a: float, time_t: float, exec: float = 0.0, tok_a: int = 0, tok_t: int = 0
) -> list[StepProfile]:
    return [StepProfile(time_a, time_t, exec, tok_a, tok_t) for _ in range(n)]


@dataclass(frozen=True)
class BreakList:
    """Indices where speculation halted, framed by -1 and n-1."""

    points: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise InvalidBreaks("breaking points need at least [-1, n-1]")
        if self.points[0] != -1:
            raise InvalidBreaks("breaking points must start with -1")
        if any(b >= a for b, a in zip(self.points, self.points[1:])):
            raise InvalidBreaks("breaking points must be strictly increasing")

    @property
    def n(self) -> int:
        return self.points[-1] + 1

    def segments(self) -> list[tuple[int, int]]:
        """(b, nb) pairs; each segment covers step indices b+1 .. nb."""
        return list(zip(self.points, self.points[1:]))

    def validate_for(self, n: int) -> None:
        # Segments may exceed k: when the target keeps outrunning the
        # approximation, nothing is ever speculative and the window never
        # saturates, leaving no breaking points at all.
        if self.points[-1] != n - 1:
            raise InvalidBreaks(f"breaking points must end at {n - 1}, got {self.points[-1]}")


def saturation_breaks(n: int, k: int) -> BreakList:
    """Breaking points when no step is ever rejected: pure k-saturation."""
    points = [-1] + list(range(k - 1, n - 1, k))
    if points[-1] != n - 1:
        points.append(n - 1)
    return BreakList(tuple(points))


def breaking_points(events: EventLog, k: int, n: int) -> BreakList:
    """Reconstruct the breaking points of a completed run from its event log.

    Replays the engine's window accounting: a commit that fills the k-window
    is a saturation break; a rejection is a break at its index and voids any
    provisionally recorded break beyond it.
    """
    settled = 0
    committed = 0
    base = 0
    points: list[int] = []
    for ev in events:
        if ev.type is EventType.STEP_EXECUTED:
            committed = ev.index + 1
            if committed - base == k:
                points.append(ev.index)
        elif ev.type is EventType.STEP_VERIFIED:
            settled = ev.index + 1
            if settled == committed or settled >= base + k:
                base = max(base, settled)
        elif ev.type is EventType.STEP_REJECTED:
            j = ev.index
            points = [p for p in points if p < j]
            points.append(j)
            committed = j
            settled = min(settled, j)
            base = j + 1
    points = [p for p in points if p < n - 1]
    points.append(n - 1)
    return BreakList((-1, *points))


def sequential_time(profiles: Sequence[StepProfile]) -> float:
    """Plan latency without speculation: target generation plus execution."""
    return sum(_us(p.time_t) + _us(p.exec) for p in profiles) / 1_000_000


def speculative_time(breaks: BreakList, profiles: Sequence[StepProfile], k: int) -> float:
    """Plan latency under speculation for a given breaking-point list.

    Each segment contributes the largest segment-relative target end time,
    where target j starts after approximation steps b+1..j-1 completed and
    were executed.
    """
    breaks.validate_for(len(profiles))
    total = 0
    for b, nb in breaks.segments():
        stagger = 0
        seg_max = 0
        for j in range(b + 1, nb + 1):
            seg_max = max(seg_max, stagger + _us(profiles[j].time_t))
            stagger += _us(profiles[j].time_a) + _us(profiles[j].exec)
        total += seg_max
    return total / 1_000_000


def best_case_time(profiles: Sequence[StepProfile], k: int) -> float:
    """Latency when every approximation step is accepted (k-saturation only)."""
    if not profiles:
        return 0.0
    return speculative_time(saturation_breaks(len(profiles), k), profiles, k)


def worst_case_tokens(profiles: Sequence[StepProfile], k: int) -> int:
    """Token total when every step is rejected and every in-window process
    completes before its segment closes: step i regenerates (i mod k) + 1 times.
    """
    return sum(((i % k) + 1) * (p.tok_a + p.tok_t) for i, p in enumerate(profiles))


@dataclass(frozen=True)
class TokenAccounting:
    """Per-segment token totals measured from an event log."""

    per_segment: tuple[int, ...]
    wasted: tuple[int, ...]
    q: tuple[float, ...]  # segment-relative end times
    m: tuple[int, ...]  # wasted finished-process counts

    @property
    def total(self) -> int:
        return sum(self.per_segment)


def _settle_times(events: EventLog) -> dict[int, float]:
    """Last settle timestamp per index (an index can settle twice after a
    post-presentation override)."""
    times: dict[int, float] = {}
    for ev in events:
        if ev.type is EventType.STEP_VERIFIED:
            times[ev.index] = ev.t
    return times


def total_tokens(
    breaks: BreakList, profiles: Sequence[StepProfile], k: int, events: EventLog
) -> TokenAccounting:
    """Split the run's generated tokens into segments between breaking points.

    A finished process belongs to the segment during which it finished; its
    tokens are useful when its step index lies inside the segment and wasted
    when a later rejection discarded it. Cancelled processes contribute zero.
    """
    breaks.validate_for(len(profiles))
    settle = _settle_times(events)
    end_of_log = events[-1].t if len(events) else 0.0
    boundaries: list[float] = []
    for _, nb in breaks.segments():
        boundaries.append(settle.get(nb, end_of_log))
    if boundaries:
        boundaries[-1] = end_of_log

    per_segment = [0] * len(boundaries)
    wasted = [0] * len(boundaries)
    m = [0] * len(boundaries)
    segments = breaks.segments()
    for ev in events.of_type(EventType.PROCESS_FINISHED):
        seg = next((i for i, u in enumerate(boundaries) if ev.t <= u), len(boundaries) - 1)
        tokens = ev.tokens or 0
        per_segment[seg] += tokens
        if ev.index > segments[seg][1]:
            wasted[seg] += tokens
            m[seg] += 1
    q = []
    previous = 0.0
    for u in boundaries:
        q.append(round(u - previous, 6))
        previous = u
    return TokenAccounting(tuple(per_segment), tuple(wasted), tuple(q), tuple(m))


def max_concurrency(breaks: BreakList, profiles: Sequence[StepProfile]) -> int:
    """Largest number of simultaneously running calls: the densest overlap of
    target intervals within any segment, plus one approximation process."""
    if not profiles:
        return 0
    breaks.validate_for(len(profiles))
    best = 0
    for b, nb in breaks.segments():
        marks: list[tuple[int, int]] = []
        stagger = 0
        for j in range(b + 1, nb + 1):
            marks.append((stagger, 1))
            marks.append((stagger + _us(profiles[j].time_t), -1))
            stagger += _us(profiles[j].time_a) + _us(profiles[j].exec)
        marks.sort(key=lambda mark: (mark[0], mark[1]))
        running = 0
        peak = 0
        for _, delta in marks:
            running += delta
            peak = max(peak, running)
        best = max(best, peak)
    return best + 1


@dataclass(frozen=True)
class PriceTable:
    """USD per token, by agent role and direction."""

    approx_input: float = 0.0
    approx_output: float = 0.0
    target_input: float = 0.0
    target_output: float = 0.0

    def __post_init__(self) -> None:
        values = (self.approx_input, self.approx_output, self.target_input, self.target_output)
        if any(v < 0 for v in values):
            raise ValueError("prices must be >= 0")


@dataclass(frozen=True)
class MetricsReport:
    """The metric suite over one run (minima coincide with values; dataset
    aggregation recomputes them across runs)."""

    tt: float
    min_tt: float
    st: float
    min_st: float
    to: int
    min_to: int
    so: float
    min_so: float
    mc: int
    min_mc: int
    cost: float
    steps: int = 0

    def to_dict(self) -> dict[str, float | int]:
        return {
            "TT": self.tt,
            "min_TT": self.min_tt,
            "ST": self.st,
            "min_ST": self.min_st,
            "TO": self.to,
            "min_TO": self.min_to,
            "SO": self.so,
            "min_SO": self.min_so,
            "MC": self.mc,
            "min_MC": self.min_mc,
            "cost": self.cost,
            "steps": self.steps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def measured_concurrency(events: EventLog) -> int:
    """Peak simultaneous processes; an interval ending as another starts does
    not overlap it."""
    marks: list[tuple[float, int]] = []
    for ev in events:
        if ev.type is EventType.PROCESS_STARTED:
            marks.append((ev.t, 1))
        elif ev.type in (EventType.PROCESS_FINISHED, EventType.PROCESS_CANCELLED):
            marks.append((ev.t, -1))
    marks.sort(key=lambda mark: (mark[0], mark[1]))
    running = 0
    peak = 0
    for _, delta in marks:
        running += delta
        peak = max(peak, running)
    return peak


def measure_metrics(events: EventLog, prices: PriceTable | None = None, steps: int = 0) -> MetricsReport:
    """Compute the metric suite from an event log.

    ``steps`` overrides the stepwise divisor; when <= 0 the settled step count
    is taken from the log. Cancelled processes contribute zero tokens.
    """
    prices = prices or PriceTable()
    if len(events) == 0:
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 0, 0, 0.0, 0.0, 0, 0, 0.0, steps=max(steps, 0))
    tt = events[-1].t
    if steps <= 0:
        steps = len({ev.index for ev in events.of_type(EventType.STEP_VERIFIED)})
    to = 0
    cost = 0.0
    for ev in events.of_type(EventType.PROCESS_FINISHED):
        tokens = ev.tokens or 0
        to += tokens
        cost += tokens * (prices.approx_output if ev.kind == "A" else prices.target_output)
    st = tt / steps if steps else 0.0
    so = to / steps if steps else 0.0
    mc = measured_concurrency(events)
    return MetricsReport(tt, tt, st, st, to, to, so, so, mc, mc, cost, steps=steps)


@dataclass(frozen=True)
class MetricAggregate:
    metric: str
    mean: float
    std: float
    minimum: float


_AGGREGATED = ("TT", "ST", "TO", "SO", "MC", "cost")


def aggregate_reports(reports: Iterable[MetricsReport]) -> list[MetricAggregate]:
    """Dataset-level mean/std/min per metric (population std; 0 for one run)."""
    rows = [r.to_dict() for r in reports]
    aggregates = []
    for metric in _AGGREGATED:
        values = [float(row[metric]) for row in rows]
        if not values:
            aggregates.append(MetricAggregate(metric, math.nan, math.nan, math.nan))
            continue
        aggregates.append(
            MetricAggregate(metric, statistics.fmean(values), statistics.pstdev(values), min(values))
        )
    return aggregates


def write_aggregate_csv(aggregates: Sequence[MetricAggregate], path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "mean", "std", "min"])
        for agg in aggregates:
            writer.writerow([agg.metric, repr(agg.mean), repr(agg.std), repr(agg.minimum)])
