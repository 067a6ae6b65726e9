"""Shared fixtures: plan-following agents with controllable latencies, and
event-log invariant scanners used across the suite."""

from __future__ import annotations

from typing import Mapping, Sequence

from specplan.engine.events import EventLog, EventType
from specplan.engine.virtual import AgentReply


def plan_of(n: int) -> list[str]:
    return [f"plan-step-{i}" for i in range(n - 1)] + ["terminate"]


class PlanAgent:
    """Follows a fixed plan with per-index latencies; misfires at `wrong_at`."""

    def __init__(
        self,
        plan: Sequence[str],
        latency: float = 1.0,
        tokens: int = 10,
        latencies: Mapping[int, float] | None = None,
        wrong_at: frozenset[int] | set[int] = frozenset(),
    ):
        self.plan = list(plan)
        self.latency = latency
        self.tokens = tokens
        self.latencies = dict(latencies or {})
        self.wrong_at = set(wrong_at)
        self._attempts: dict[int, int] = {}

    def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        i = len(history)
        attempt = self._attempts.get(i, 0)
        self._attempts[i] = attempt + 1
        if i >= len(self.plan):
            content = "terminate"
        elif i in self.wrong_at:
            content = f"wrong-{i}-{attempt}"
        else:
            content = self.plan[i]
        return AgentReply(content, self.tokens, self.latencies.get(i, self.latency))


# ---- invariant scanners ----


def peak_concurrency(events: EventLog) -> tuple[int, int]:
    """(max concurrent targets, max concurrent processes) over the log."""
    running_targets = 0
    running_total = 0
    peak_targets = 0
    peak_total = 0
    for ev in events:
        if ev.type is EventType.PROCESS_STARTED:
            running_total += 1
            if ev.kind == "T":
                running_targets += 1
        elif ev.type in (EventType.PROCESS_FINISHED, EventType.PROCESS_CANCELLED):
            running_total -= 1
            if ev.kind == "T":
                running_targets -= 1
        peak_targets = max(peak_targets, running_targets)
        peak_total = max(peak_total, running_total)
    return peak_targets, peak_total


def check_no_orphans(events: EventLog) -> None:
    """After every rejection (and its cancellation burst), no process with a
    larger index is still running."""
    running: list[tuple[str, int]] = []
    items = list(events)
    for pos, ev in enumerate(items):
        if ev.type is EventType.PROCESS_STARTED:
            running.append((ev.kind, ev.index))
        elif ev.type in (EventType.PROCESS_FINISHED, EventType.PROCESS_CANCELLED):
            running.remove((ev.kind, ev.index))
        elif ev.type is EventType.STEP_REJECTED:
            j = ev.index
            scan = pos + 1
            alive = list(running)
            while scan < len(items) and items[scan].type is EventType.PROCESS_CANCELLED:
                alive.remove((items[scan].kind, items[scan].index))
                scan += 1
            beyond = [entry for entry in alive if entry[1] > j]
            assert not beyond, f"orphaned processes after rejection at {j}: {beyond}"


def check_presentation_order(events: EventLog) -> None:
    """Target presentations strictly index-ordered; an approximation step is
    presented only once every earlier index carries a settle event."""
    settled: set[int] = set()
    last_target = -1
    for ev in events:
        if ev.type is EventType.STEP_VERIFIED:
            settled.add(ev.index)
        elif ev.type is EventType.STEP_REJECTED:
            settled = {i for i in settled if i < ev.index}
        elif ev.type is EventType.PRESENT_TARGET:
            assert ev.index == last_target + 1, (
                f"target presentation misordered: {ev.index} after {last_target}"
            )
            last_target = ev.index
        elif ev.type is EventType.PRESENT_APPROX:
            missing = [i for i in range(ev.index) if i not in settled]
            assert not missing, (
                f"approximation step {ev.index} presented with unverified prefix {missing}"
            )


def presented_transcript(events: EventLog) -> dict[int, str]:
    """Authoritative per-index content as a viewer of the stream would see it."""
    final: dict[int, str] = {}
    for ev in events:
        if ev.type in (EventType.PRESENT_TARGET, EventType.USER_INTERRUPT):
            final[ev.index] = ev.content or ""
    return final
