"""Closed-form latency/token/concurrency analyses against enumeration oracles,
plus event-log metric measurement."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specplan import analytics as an
from specplan.engine.events import Event, EventLog, EventType
from specplan.errors import InvalidBreaks

P44 = an.constant_profiles(10, time_a=2, time_t=8, tok_a=10, tok_t=20)


def segment_time_oracle(profiles, b, nb):
    """Literal enumeration of segment-relative target end times."""
    best = 0.0
    for j in range(b + 1, nb + 1):
        stagger = sum(profiles[l].time_a + profiles[l].exec for l in range(b + 1, j))
        best = max(best, stagger + profiles[j].time_t)
    return best


def test_sequential_time():
    assert an.sequential_time(P44) == 80.0
    assert an.sequential_time([]) == 0.0
    mixed = [an.StepProfile(1, 3, 0.5), an.StepProfile(2, 4, 1.5)]
    assert an.sequential_time(mixed) == (3 + 0.5) + (4 + 1.5)


def test_best_case_corners():
    assert an.best_case_time(P44, 10) == 26.0
    assert an.best_case_time(P44, 5) == 32.0
    assert an.best_case_time(P44, 1) == 80.0
    assert an.best_case_time(P44, 15) == 26.0  # k >= n: one segment
    assert an.best_case_time([], 3) == 0.0


def test_speculative_time_matches_enumeration():
    for k in (1, 2, 3, 5, 10):
        breaks = an.saturation_breaks(10, k)
        expected = sum(segment_time_oracle(P44, b, nb) for b, nb in breaks.segments())
        assert an.speculative_time(breaks, P44, k) == expected


def test_speculative_time_rejects_malformed_breaks():
    with pytest.raises(InvalidBreaks):
        an.BreakList((0, 9))  # must start at -1
    with pytest.raises(InvalidBreaks):
        an.BreakList((-1, 5, 5, 9))
    with pytest.raises(InvalidBreaks):
        an.speculative_time(an.BreakList((-1, 5)), P44, 10)  # wrong n


def test_saturation_breaks():
    assert an.saturation_breaks(10, 10).points == (-1, 9)
    assert an.saturation_breaks(10, 5).points == (-1, 4, 9)
    assert an.saturation_breaks(10, 4).points == (-1, 3, 7, 9)
    assert an.saturation_breaks(1, 3).points == (-1, 0)


def test_worst_case_tokens():
    assert an.worst_case_tokens(P44, 10) == 1650
    assert an.worst_case_tokens(P44, 4) == 690
    single = an.constant_profiles(1, time_a=2, time_t=8, tok_a=10, tok_t=20)
    assert an.worst_case_tokens(single, 5) == 30
    # literal enumeration
    for k in (1, 2, 3, 4, 7, 10):
        expected = sum(((i % k) + 1) * 30 for i in range(10))
        assert an.worst_case_tokens(P44, k) == expected


def max_concurrency_oracle(profiles, breaks):
    """Sample overlap counts at every target start instant (half-open ends)."""
    best = 0
    for b, nb in breaks.segments():
        spans = []
        stagger = 0.0
        for j in range(b + 1, nb + 1):
            spans.append((stagger, stagger + profiles[j].time_t))
            stagger += profiles[j].time_a + profiles[j].exec
        for start, _ in spans:
            overlap = sum(1 for s, e in spans if s <= start < e)
            best = max(best, overlap)
    return best + 1


def test_max_concurrency():
    assert an.max_concurrency(an.saturation_breaks(10, 10), P44) == 5
    assert an.max_concurrency(an.saturation_breaks(10, 4), P44) == 5
    assert an.max_concurrency(an.saturation_breaks(10, 1), P44) == 2
    fast_target = an.constant_profiles(10, time_a=8, time_t=2)
    assert an.max_concurrency(an.saturation_breaks(10, 5), fast_target) == 2
    for k in (1, 2, 3, 5, 10):
        breaks = an.saturation_breaks(10, k)
        assert an.max_concurrency(breaks, P44) == max_concurrency_oracle(P44, breaks)


@st.composite
def profiles_and_breaks(draw, exec_choices=(0.0,), constant=False):
    n = draw(st.integers(min_value=1, max_value=12))
    k = draw(st.integers(min_value=1, max_value=6))
    profiles = []
    for i in range(n):
        if not constant or i == 0:
            time_a = draw(st.floats(min_value=0.1, max_value=5, allow_nan=False))
            time_t = draw(st.floats(min_value=time_a, max_value=10, allow_nan=False))
            exec_time = draw(st.sampled_from(exec_choices))
        profiles.append(an.StepProfile(time_a, time_t, exec_time, 10, 20))
    # random valid break list with segments <= k
    points = [-1]
    while points[-1] < n - 1:
        points.append(min(points[-1] + draw(st.integers(min_value=1, max_value=k)), n - 1))
    return profiles, an.BreakList(tuple(points)), k


@given(profiles_and_breaks(constant=True))
@settings(max_examples=200)
def test_bound_sandwich_property(case):
    # Constant per-step profiles with A no slower than T and zero execution
    # time: the setting the closed forms describe. Heterogeneous profiles can
    # beat aligned k-chunks through lucky break placement, and the formula's
    # segment clocks exclude inter-segment execution.
    profiles, breaks, k = case
    best = an.best_case_time(profiles, k)
    spec = an.speculative_time(breaks, profiles, k)
    seq = an.sequential_time(profiles)
    assert best <= spec + 1e-9
    assert spec <= seq + 1e-9
    assert an.max_concurrency(breaks, profiles) <= k + 1


@given(profiles_and_breaks(exec_choices=(0.0, 0.5, 1.0)))
@settings(max_examples=200)
def test_speculative_within_sequential_with_execution(case):
    profiles, breaks, k = case
    assert an.speculative_time(breaks, profiles, k) <= an.sequential_time(profiles) + 1e-9


def _log(entries) -> EventLog:
    return EventLog([Event(*entry) for entry in entries])


def test_measured_concurrency_half_open_intervals():
    log = _log(
        [
            (0.0, EventType.PROCESS_STARTED, 0, "T"),
            (0.0, EventType.PROCESS_STARTED, 0, "A"),
            (2.0, EventType.PROCESS_FINISHED, 0, "A", "x", 10),
            (2.0, EventType.PROCESS_STARTED, 1, "T"),
            (8.0, EventType.PROCESS_FINISHED, 0, "T", "x", 20),
            (8.0, EventType.PROCESS_STARTED, 2, "T"),
            (10.0, EventType.PROCESS_FINISHED, 1, "T", "x", 20),
            (16.0, EventType.PROCESS_FINISHED, 2, "T", "x", 20),
        ]
    )
    # ends sort before starts at equal timestamps: the A0/T1 handoff at t=2
    # and the T0/T2 handoff at t=8 never stack three processes
    assert an.measured_concurrency(log) == 2


def test_measure_metrics_empty_log():
    report = an.measure_metrics(EventLog(), steps=0)
    assert report.tt == 0.0 and report.to == 0 and report.mc == 0 and report.st == 0.0


def test_measure_metrics_cost_uses_role_prices():
    log = _log(
        [
            (0.0, EventType.PROCESS_STARTED, 0, "A"),
            (0.0, EventType.PROCESS_STARTED, 0, "T"),
            (2.0, EventType.PROCESS_FINISHED, 0, "A", "x", 10),
            (8.0, EventType.PROCESS_FINISHED, 0, "T", "x", 20),
            (8.0, EventType.STEP_VERIFIED, 0, "T", "x"),
            (8.0, EventType.TERMINATED, 0, "T"),
        ]
    )
    prices = an.PriceTable(approx_output=0.001, target_output=0.002)
    report = an.measure_metrics(log, prices)
    assert report.to == 30
    assert report.cost == pytest.approx(10 * 0.001 + 20 * 0.002)
    assert report.steps == 1


def _sim_run(accuracy: float, k: int, seed: int = 0):
    from specplan import simkit as sk
    from specplan.engine.types import ProcessKind

    world = sk.SimWorld(n=10, accuracy=accuracy, seed=seed)
    return sk.simulate_run(
        world,
        sk.SimAgentSpec(2.0, 10, ProcessKind.APPROXIMATION),
        sk.SimAgentSpec(8.0, 20, ProcessKind.TARGET),
        k,
    )


def test_breaking_points_from_engine_logs():
    assert an.breaking_points(_sim_run(1.0, 10).events, 10, 10).points == (-1, 9)
    assert an.breaking_points(_sim_run(1.0, 5).events, 5, 10).points == (-1, 4, 9)
    all_mismatch = an.breaking_points(_sim_run(0.0, 10).events, 10, 10)
    assert all_mismatch.points == (-1, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9)


def test_total_tokens_best_case_has_no_waste():
    run = _sim_run(1.0, 10)
    breaks = an.breaking_points(run.events, 10, 10)
    accounting = an.total_tokens(breaks, run.profiles, 10, run.events)
    assert accounting.total == 300
    assert sum(accounting.wasted) == 0
    assert sum(accounting.m) == 0
    assert accounting.q == (26.0,)


def test_total_tokens_counts_finished_offprefix_work_as_wasted():
    run = _sim_run(0.0, 10)
    breaks = an.breaking_points(run.events, 10, 10)
    accounting = an.total_tokens(breaks, run.profiles, 10, run.events)
    assert accounting.total == run.metrics.to
    # every 8-second repair segment strands two completed approximations
    assert all(count >= 1 for count in accounting.m[:-1])
    assert sum(accounting.wasted) > 0
    assert all(seg >= waste for seg, waste in zip(accounting.per_segment, accounting.wasted))


def test_aggregate_reports_stats():
    reports = [
        an.MetricsReport(10.0, 10.0, 1.0, 1.0, 100, 100, 10.0, 10.0, 3, 3, 0.0, steps=10),
        an.MetricsReport(20.0, 20.0, 2.0, 2.0, 200, 200, 20.0, 20.0, 5, 5, 0.0, steps=10),
    ]
    aggregates = {agg.metric: agg for agg in an.aggregate_reports(reports)}
    assert aggregates["TT"].mean == 15.0
    assert aggregates["TT"].minimum == 10.0
    assert aggregates["TT"].std == pytest.approx(5.0)
    assert aggregates["MC"].minimum == 3
