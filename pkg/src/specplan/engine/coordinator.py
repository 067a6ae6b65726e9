"""The speculative planning state machine.

The coordinator owns all mutable state of one planning session: the committed
trajectory, the verified prefix, process records, the presentation trackers,
open interrupt windows, and the event log. It is runtime-agnostic: a driver
(virtual-time scheduler or asyncio loop) feeds it completions, timer fires and
user interrupts one at a time, and it reacts by launching new work through a
narrow port. All mutation happens inside these handler calls, so a single
ordered driver serializes everything.

Scheduling rules:

* The approximation agent proposes steps strictly sequentially; each proposal
  is executed before the next pair of agent calls is issued.
* For every next index, the approximation and target agents are launched
  together on the same committed prefix.
* At most ``k`` steps may be committed beyond the current window base; the
  window base advances when every step of the window is settled (or the whole
  trajectory is settled), and resets just past a repaired index.
* A settled index means its step is authoritative: verified against the
  target, produced by the target directly, or injected by the user.
* On a verification mismatch at index j, the trajectory truncates to [0..j),
  the target's step is re-executed and committed, and every running process
  with index > j is cancelled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

from specplan.engine.events import Event, EventLog, EventType
from specplan.engine.matching import is_terminate, verify_step
from specplan.engine.presentation import (
    ActionKind,
    InterruptKind,
    InterruptOutcome,
    PresentationState,
    UserInterrupt,
    apply_action,
    reschedule_next,
)
from specplan.engine.types import (
    EngineConfig,
    Observation,
    ProcessKind,
    ProcessRecord,
    ProcessStatus,
    Step,
    StepSource,
    Trajectory,
    TrajectoryEntry,
)


class RuntimePort(Protocol):
    """Services a driver provides to the coordinator."""

    def now_us(self) -> int: ...

    def launch_agent(
        self, kind: ProcessKind, pid: int, index: int, prompt: str, history: list[tuple[str, str]]
    ) -> None: ...

    def launch_exec(self, pid: int, step: Step, history: list[tuple[str, str]]) -> None: ...

    def start_timer(self, delay_us: int, index: int) -> int: ...

    def cancel_process(self, pid: int) -> None: ...

    def cancel_timer(self, timer_id: int) -> None: ...


@dataclass
class _ExecState:
    pid: int
    step: Step


@dataclass
class PlanResult:
    trajectory: Trajectory
    events: EventLog
    records: list[ProcessRecord]
    overflowed: bool = False

    @property
    def verified_steps(self) -> int:
        return len(self.trajectory.entries)


class PlanCoordinator:
    def __init__(
        self,
        config: EngineConfig,
        runtime: RuntimePort,
        *,
        on_event: Callable[[Event], None] | None = None,
    ):
        self.cfg = config
        self.runtime = runtime
        self.on_event = on_event

        self.task: str = ""
        self.traj: list[TrajectoryEntry] = []
        self.verified = 0
        self.window_base = 0

        self.records: dict[int, ProcessRecord] = {}
        self._next_pid = 0
        self.approx_pid: int | None = None
        self.approx_index: int | None = None
        self.target_pids: dict[int, int] = {}
        self.target_results: dict[int, Step] = {}
        self.exec_state: _ExecState | None = None

        self.pstate = PresentationState()
        self.open_windows: dict[int, InterruptKind] = {}
        self._window_timers: dict[int, int] = {}
        self.interrupts: list[UserInterrupt] = []

        self.log = EventLog()
        self.terminated = False
        self.overflowed = False
        self.failed: Exception | None = None

    # ---- ProgressView protocol (presentation scheduler) ----

    def committed_step(self, index: int) -> Step | None:
        if 0 <= index < len(self.traj):
            return self.traj[index].step
        return None

    def settled_count(self) -> int:
        return self.verified

    # ---- lifecycle ----

    def start(self, task: str) -> None:
        self.task = task
        self._launch_pair()

    @property
    def done(self) -> bool:
        return self.terminated or self.failed is not None

    def result(self) -> PlanResult:
        trajectory = Trajectory(task=self.task, entries=list(self.traj))
        return PlanResult(
            trajectory=trajectory,
            events=self.log,
            records=list(self.records.values()),
            overflowed=self.overflowed,
        )

    # ---- event emission ----

    def _now_s(self) -> float:
        return self.runtime.now_us() / 1_000_000

    def _emit(
        self,
        type_: EventType,
        index: int,
        kind: str,
        content: str | None = None,
        tokens: int | None = None,
    ) -> None:
        event = Event(t=self._now_s(), type=type_, index=index, kind=kind, content=content, tokens=tokens)
        self.log.append(event)
        if self.on_event is not None:
            self.on_event(event)

    # ---- launches ----

    def _prompt(self) -> str:
        return Trajectory(task=self.task, entries=self.traj).prompt()

    def _history(self) -> list[tuple[str, str]]:
        return [(e.step.content, e.observation.content) for e in self.traj]

    def _terminate_pending(self) -> bool:
        return bool(self.traj) and is_terminate(self.traj[-1].step.content, self.cfg.terminate_token)

    def _may_propose(self) -> bool:
        if self.done or self.approx_pid is not None or self.exec_state is not None:
            return False
        if self._terminate_pending():
            return False
        i = len(self.traj)
        return i < self.cfg.max_steps and i < self.window_base + self.cfg.k

    def _launch_pair(self) -> None:
        """Launch the approximation and target agents together at the next index."""
        if not self._may_propose():
            return
        i = len(self.traj)
        prompt = self._prompt()
        history = self._history()
        self.approx_pid = self._launch_agent(ProcessKind.APPROXIMATION, i, prompt, history)
        self.approx_index = i
        self.target_pids[i] = self._launch_agent(ProcessKind.TARGET, i, prompt, history)

    def _launch_agent(
        self, kind: ProcessKind, index: int, prompt: str, history: list[tuple[str, str]]
    ) -> int:
        pid = self._next_pid
        self._next_pid += 1
        self.records[pid] = ProcessRecord(pid=pid, kind=kind, index=index, start_time=self._now_s())
        self.runtime.launch_agent(kind, pid, index, prompt, history)
        self._emit(EventType.PROCESS_STARTED, index, kind.value)
        return pid

    def _start_exec(self, step: Step) -> None:
        assert self.exec_state is None
        pid = self._next_pid
        self._next_pid += 1
        self.exec_state = _ExecState(pid=pid, step=step)
        self.runtime.launch_exec(pid, step, self._history())

    def _cancel_agent(self, pid: int) -> None:
        rec = self.records[pid]
        assert rec.running
        rec.status = ProcessStatus.CANCELLED
        rec.end_time = self._now_s()
        self.runtime.cancel_process(pid)
        self._emit(EventType.PROCESS_CANCELLED, rec.index, rec.kind.value)

    # ---- completions ----

    def on_agent_done(self, pid: int, content: str, tokens: int) -> None:
        rec = self.records.get(pid)
        if rec is None or not rec.running or self.done:
            return
        now = self._now_s()
        rec.status = ProcessStatus.COMPLETED
        rec.end_time = now
        source = (
            StepSource.APPROXIMATION
            if rec.kind is ProcessKind.APPROXIMATION
            else StepSource.TARGET
        )
        step = Step(rec.index, content, source, tokens, now - rec.start_time)
        rec.output = step
        self._emit(EventType.PROCESS_FINISHED, rec.index, rec.kind.value, content=content, tokens=tokens)

        if rec.kind is ProcessKind.APPROXIMATION:
            assert pid == self.approx_pid and rec.index == len(self.traj)
            self.approx_pid = None
            self.approx_index = None
            self._start_exec(step)
        else:
            self.target_pids.pop(rec.index, None)
            if self.open_windows.get(rec.index) is InterruptKind.LATENCY_OVERRIDE:
                self._close_window(rec.index)
            if (
                rec.index == len(self.traj)
                and self.approx_pid is not None
                and self.approx_index == rec.index
            ):
                # The target outran its own approximation twin; its step is
                # authoritative, so the pending approximation is moot.
                self._cancel_agent(self.approx_pid)
                self.approx_pid = None
                self.approx_index = None
                self._start_exec(step)
            else:
                self.target_results[rec.index] = step
                self._settle_pump()
        self._after_change()

    def on_agent_failed(self, pid: int, error: Exception) -> None:
        rec = self.records.get(pid)
        if rec is None or not rec.running or self.done:
            return
        rec.status = ProcessStatus.CANCELLED
        rec.end_time = self._now_s()
        self._emit(EventType.PROCESS_CANCELLED, rec.index, rec.kind.value)
        if pid == self.approx_pid:
            self.approx_pid = None
            self.approx_index = None
        elif rec.kind is ProcessKind.TARGET:
            self.target_pids.pop(rec.index, None)
        self._fail(error)

    def on_exec_done(self, pid: int, obs_content: str, obs_duration: float) -> None:
        if self.done or self.exec_state is None or self.exec_state.pid != pid:
            return
        step = self.exec_state.step
        self.exec_state = None
        assert step.index == len(self.traj)
        self.traj.append(TrajectoryEntry(step, Observation(obs_content, obs_duration)))
        lane = "A" if step.source is StepSource.APPROXIMATION else "T"
        self._emit(EventType.STEP_EXECUTED, step.index, lane, content=step.content)
        self._settle_pump()
        self._after_change()

    def on_exec_failed(self, pid: int, error: Exception) -> None:
        if self.done or self.exec_state is None or self.exec_state.pid != pid:
            return
        self.exec_state = None
        self._fail(error)

    def on_window_deadline(self, index: int) -> None:
        if self.done:
            return
        if self.open_windows.get(index) is InterruptKind.TARGET_OVERRIDE:
            self._close_window(index)

    # ---- verification ----

    def _settle_pump(self) -> None:
        """Settle committed steps in strictly increasing index order: target-
        and user-sourced entries are authoritative by construction, while
        approximation entries wait for their target counterpart and verify."""
        while self.verified < len(self.traj):
            v = self.verified
            entry = self.traj[v]
            if entry.step.source is not StepSource.APPROXIMATION:
                self.verified = v + 1
                self._emit(EventType.STEP_VERIFIED, v, "T", content=entry.step.content)
                continue
            t_step = self.target_results.get(v)
            if t_step is None:
                return
            del self.target_results[v]
            if verify_step(entry.step, t_step, self.cfg.match_policy):
                self.verified = v + 1
                self._emit(EventType.STEP_VERIFIED, v, "T", content=entry.step.content)
            else:
                self._emit(EventType.STEP_REJECTED, v, "A", content=entry.step.content)
                self.resolve_mismatch(v, t_step)
                return

    def resolve_mismatch(self, j: int, replacement: Step) -> set[int]:
        """Replace index j with an authoritative step: truncate the trajectory
        to [0..j), cancel every running process with a larger index, discard
        stale stashed results, and re-execute the replacement. Returns the ids
        of the processes cancelled by this repair."""
        cancelled: set[int] = set()
        for idx in sorted(self.target_pids):
            if idx > j:
                pid = self.target_pids.pop(idx)
                self._cancel_agent(pid)
                cancelled.add(pid)
        if self.approx_pid is not None and self.approx_index is not None and self.approx_index > j:
            self._cancel_agent(self.approx_pid)
            cancelled.add(self.approx_pid)
            self.approx_pid = None
            self.approx_index = None
        if self.exec_state is not None and self.exec_state.step.index > j:
            self.runtime.cancel_process(self.exec_state.pid)
            self.exec_state = None
        for idx in sorted(self.open_windows):
            if idx > j:
                self._close_window(idx)
        self.target_results = {i: s for i, s in self.target_results.items() if i < j}
        del self.traj[j:]
        self.verified = min(self.verified, j)
        self.window_base = j + 1
        self.pstate.rewind_to(j + 1)
        self._start_exec(replacement)
        return cancelled

    # ---- interrupt windows ----

    def _open_window(self, index: int, kind: InterruptKind) -> None:
        self.open_windows[index] = kind
        lane = "A" if kind is InterruptKind.LATENCY_OVERRIDE else "T"
        self._emit(EventType.WINDOW_OPEN, index, lane)
        if kind is InterruptKind.TARGET_OVERRIDE:
            delay_us = round(self.cfg.interrupt_window * 1_000_000)
            self._window_timers[index] = self.runtime.start_timer(delay_us, index)

    def _close_window(self, index: int) -> None:
        kind = self.open_windows.pop(index)
        timer = self._window_timers.pop(index, None)
        if timer is not None:
            self.runtime.cancel_timer(timer)
        lane = "A" if kind is InterruptKind.LATENCY_OVERRIDE else "T"
        self._emit(EventType.WINDOW_CLOSED, index, lane)

    def deliver_interrupt(self, index: int, content: str) -> InterruptOutcome:
        """Apply a user interrupt; acceptance depends solely on window state."""
        if not content.strip():
            raise ValueError("interrupt content must be non-empty")
        if self.done:
            return InterruptOutcome.STALE
        kind = self.open_windows.get(index)
        if kind is None:
            return InterruptOutcome.STALE
        self.interrupts.append(
            UserInterrupt(kind=kind, index=index, content=content, received_at=self._now_s())
        )
        lane = "A" if kind is InterruptKind.LATENCY_OVERRIDE else "T"
        self._emit(EventType.USER_INTERRUPT, index, lane, content=content)
        self._close_window(index)
        user_step = Step(index, content, StepSource.USER)

        if kind is InterruptKind.LATENCY_OVERRIDE:
            # Window open means the target at this index is still running.
            self._cancel_agent(self.target_pids.pop(index))
            committed = self.traj[index].step
            if verify_step(committed, user_step, self.cfg.match_policy):
                # The user (as oracle) confirmed the speculative step: settle
                # it in place and let downstream work continue.
                self.verified = index + 1
                self._emit(EventType.STEP_VERIFIED, index, "T", content=committed.content)
                self._settle_pump()
            else:
                self._emit(EventType.STEP_REJECTED, index, "A", content=committed.content)
                self.resolve_mismatch(index, user_step)
        else:
            current = self.traj[index].step
            if content.strip() == current.content.strip():
                pass  # no-op override; provenance is carried by the interrupt event
            else:
                lane = "A" if current.source is StepSource.APPROXIMATION else "T"
                self._emit(EventType.STEP_REJECTED, index, lane, content=current.content)
                self.resolve_mismatch(index, user_step)
        self._after_change()
        return InterruptOutcome.ACCEPTED

    # ---- post-event bookkeeping ----

    def _update_window_base(self) -> None:
        if self.verified == len(self.traj) or self.verified >= self.window_base + self.cfg.k:
            self.window_base = max(self.window_base, self.verified)

    def _presentation_pump(self) -> None:
        while True:
            action = reschedule_next(self.pstate, self)
            if action is None:
                return
            now = self._now_s()
            if action.kind is ActionKind.PRESENT_APPROX:
                self._emit(EventType.PRESENT_APPROX, action.index, "A", content=action.content)
                apply_action(
                    self.pstate, action, now=now, target_pending=action.index in self.target_pids
                )
            elif action.kind is ActionKind.OPEN_WINDOW:
                apply_action(self.pstate, action, now=now)
                if action.index in self.target_pids and action.index not in self.open_windows:
                    self._open_window(action.index, InterruptKind.LATENCY_OVERRIDE)
            elif action.kind is ActionKind.PRESENT_TARGET:
                self._emit(EventType.PRESENT_TARGET, action.index, "T", content=action.content)
                apply_action(self.pstate, action, now=now)
                # A brief override window follows the presentation, except for
                # the sentinel and for steps the user dictated themselves.
                if (
                    self.cfg.interrupt_window > 0
                    and not is_terminate(action.content, self.cfg.terminate_token)
                    and self.traj[action.index].step.source is not StepSource.USER
                ):
                    self._open_window(action.index, InterruptKind.TARGET_OVERRIDE)
            else:
                apply_action(self.pstate, action, now=now)

    def _maybe_finish(self) -> None:
        if self.done or self.exec_state is not None or self.approx_pid is not None:
            return
        if self.verified != len(self.traj):
            return
        if self._terminate_pending():
            self._finish(overflowed=False)
        elif len(self.traj) >= self.cfg.max_steps:
            self._finish(overflowed=True)

    def _finish(self, overflowed: bool) -> None:
        for idx in sorted(self.open_windows):
            self._close_window(idx)
        self.overflowed = overflowed
        final_index = len(self.traj) - 1 if self.traj else -1
        self._emit(EventType.TERMINATED, final_index, "T")
        self.terminated = True

    def _fail(self, error: Exception) -> None:
        for idx in sorted(self.target_pids):
            self._cancel_agent(self.target_pids.pop(idx))
        if self.approx_pid is not None:
            self._cancel_agent(self.approx_pid)
            self.approx_pid = None
            self.approx_index = None
        if self.exec_state is not None:
            self.runtime.cancel_process(self.exec_state.pid)
            self.exec_state = None
        for idx in sorted(self.open_windows):
            self._close_window(idx)
        self.failed = error

    def _after_change(self) -> None:
        if self.done:
            return
        self._update_window_base()
        self._presentation_pump()
        self._maybe_finish()
        if not self.terminated:
            self._launch_pair()
