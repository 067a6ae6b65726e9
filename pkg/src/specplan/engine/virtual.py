"""Deterministic virtual-time driver for the planning coordinator.

A discrete-event scheduler advances an integer-microsecond clock. Agent and
executor calls are invoked synchronously at launch time to obtain their output
and duration; only the *completion* is scheduled. Ties are broken by a fixed
priority (target completions before approximation completions, then
executions, timers and interrupts, then by step index), which makes every run
with the same inputs produce a byte-identical event log.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol, Sequence

from specplan.engine.coordinator import PlanCoordinator, PlanResult
from specplan.engine.events import Event
from specplan.engine.types import EngineConfig, ProcessKind, Step
from specplan.errors import AgentError, ExecutionError

RETRY_LIMIT = 2
RETRY_BACKOFF_S = 0.5

# Tie-break classes for simultaneous events.
_TARGET_DONE = 0
_APPROX_DONE = 1
_EXEC_DONE = 2
_TIMER = 3
_INTERRUPT = 4
_RETRY = 5


@dataclass(frozen=True)
class AgentReply:
    content: str
    tokens: int
    latency: float


@dataclass(frozen=True)
class ExecReply:
    content: str
    duration: float = 0.0


class VirtualAgent(Protocol):
    def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply: ...


class VirtualExecutor(Protocol):
    side_effecting: bool

    def execute(self, step: Step, history: Sequence[tuple[str, str]]) -> ExecReply: ...


class PureExecutor:
    """Default executor: echoes an acknowledgement, takes fixed virtual time."""

    side_effecting = False

    def __init__(self, duration: float = 0.0):
        self.duration = duration

    def execute(self, step: Step, history: Sequence[tuple[str, str]]) -> ExecReply:
        return ExecReply(content=f"ok[{step.index}]", duration=self.duration)


@dataclass(frozen=True)
class ScheduledInterrupt:
    at: float
    index: int
    content: str


@dataclass
class _Entry:
    type: str
    pid: int = -1
    timer_id: int = -1
    index: int = -1
    content: str = ""
    tokens: int = 0
    duration: float = 0.0
    error: Exception | None = None
    kind: ProcessKind | None = None
    prompt: str = ""
    history: tuple[tuple[str, str], ...] = ()
    attempt: int = 0


Observer = Callable[[Event, "VirtualRuntime"], None]


class VirtualRuntime:
    """RuntimePort implementation driving a PlanCoordinator in virtual time."""

    def __init__(
        self,
        approx: VirtualAgent,
        target: VirtualAgent,
        executor: VirtualExecutor,
        config: EngineConfig,
        *,
        interrupts: Iterable[ScheduledInterrupt] = (),
        observers: Sequence[Observer] = (),
    ):
        if getattr(executor, "side_effecting", False) and not config.allow_side_effects:
            raise ValueError(
                "side-effecting executors must be enabled via EngineConfig.allow_side_effects"
            )
        self._approx = approx
        self._target = target
        self._executor = executor
        self._observers = list(observers)
        self._heap: list[tuple[int, int, int, int, _Entry]] = []
        self._seq = 0
        self._clock_us = 0
        self._cancelled_pids: set[int] = set()
        self._cancelled_timers: set[int] = set()
        self._next_timer = 0
        self.coordinator = PlanCoordinator(config, self, on_event=self._fanout)
        for item in interrupts:
            self.schedule_interrupt(round(item.at * 1_000_000), item.index, item.content)

    # ---- RuntimePort ----

    def now_us(self) -> int:
        return self._clock_us

    def launch_agent(
        self,
        kind: ProcessKind,
        pid: int,
        index: int,
        prompt: str,
        history: list[tuple[str, str]],
    ) -> None:
        self._attempt_agent(kind, pid, index, prompt, tuple(history), attempt=0)

    def launch_exec(self, pid: int, step: Step, history: list[tuple[str, str]]) -> None:
        try:
            reply = self._executor.execute(step, history)
        except Exception:
            self._push(
                self._clock_us,
                _EXEC_DONE,
                step.index,
                _Entry(type="exec_failed", pid=pid, index=step.index,
                       error=ExecutionError(step.index)),
            )
            return
        self._push(
            self._clock_us + round(reply.duration * 1_000_000),
            _EXEC_DONE,
            step.index,
            _Entry(
                type="exec_done",
                pid=pid,
                index=step.index,
                content=reply.content,
                duration=reply.duration,
            ),
        )

    def start_timer(self, delay_us: int, index: int) -> int:
        timer_id = self._next_timer
        self._next_timer += 1
        self._push(
            self._clock_us + delay_us,
            _TIMER,
            index,
            _Entry(type="timer", timer_id=timer_id, index=index),
        )
        return timer_id

    def cancel_process(self, pid: int) -> None:
        self._cancelled_pids.add(pid)

    def cancel_timer(self, timer_id: int) -> None:
        self._cancelled_timers.add(timer_id)

    # ---- scheduling ----

    def _push(self, t_us: int, klass: int, index: int, entry: _Entry) -> None:
        t_us = max(t_us, self._clock_us)
        heapq.heappush(self._heap, (t_us, klass, index, self._seq, entry))
        self._seq += 1

    def _attempt_agent(
        self,
        kind: ProcessKind,
        pid: int,
        index: int,
        prompt: str,
        history: tuple[tuple[str, str], ...],
        attempt: int,
    ) -> None:
        agent = self._approx if kind is ProcessKind.APPROXIMATION else self._target
        klass = _APPROX_DONE if kind is ProcessKind.APPROXIMATION else _TARGET_DONE
        try:
            reply = agent.propose(prompt, history)
        except Exception as exc:
            if attempt >= RETRY_LIMIT:
                self._push(
                    self._clock_us,
                    klass,
                    index,
                    _Entry(type="agent_failed", pid=pid, index=index,
                           error=AgentError(index, str(exc))),
                )
            else:
                self._push(
                    self._clock_us + round(RETRY_BACKOFF_S * 1_000_000),
                    _RETRY,
                    index,
                    _Entry(
                        type="retry",
                        pid=pid,
                        index=index,
                        kind=kind,
                        prompt=prompt,
                        history=history,
                        attempt=attempt + 1,
                    ),
                )
            return
        self._push(
            self._clock_us + round(reply.latency * 1_000_000),
            klass,
            index,
            _Entry(type="agent_done", pid=pid, index=index,
                   content=reply.content, tokens=reply.tokens),
        )

    def schedule_interrupt(self, at_us: int, index: int, content: str) -> None:
        self._push(at_us, _INTERRUPT, index, _Entry(type="interrupt", index=index, content=content))

    def inject_interrupt(self, index: int, content: str):
        """Apply an interrupt right now (between events); used by live drivers."""
        return self.coordinator.deliver_interrupt(index, content)

    # ---- driving ----

    def _stale(self, entry: _Entry) -> bool:
        if entry.type in ("agent_done", "agent_failed") and entry.pid in self._cancelled_pids:
            return True
        if entry.type == "retry" and entry.pid in self._cancelled_pids:
            return True
        if entry.type in ("exec_done", "exec_failed") and entry.pid in self._cancelled_pids:
            return True
        if entry.type == "timer" and entry.timer_id in self._cancelled_timers:
            return True
        return False

    def next_time_us(self) -> int | None:
        while self._heap:
            t_us, _, _, _, entry = self._heap[0]
            if self._stale(entry):
                heapq.heappop(self._heap)
                continue
            return t_us
        return None

    def process_next(self) -> bool:
        """Pop and dispatch one live event; returns False when none remain."""
        while self._heap:
            t_us, _, _, _, entry = heapq.heappop(self._heap)
            if self._stale(entry):
                continue
            assert t_us >= self._clock_us
            self._clock_us = t_us
            self._dispatch(entry)
            return True
        return False

    def _dispatch(self, entry: _Entry) -> None:
        coord = self.coordinator
        if entry.type == "agent_done":
            coord.on_agent_done(entry.pid, entry.content, entry.tokens)
        elif entry.type == "agent_failed":
            coord.on_agent_failed(entry.pid, entry.error or AgentError(entry.index))
        elif entry.type == "exec_done":
            coord.on_exec_done(entry.pid, entry.content, entry.duration)
        elif entry.type == "exec_failed":
            coord.on_exec_failed(entry.pid, entry.error or ExecutionError(entry.index))
        elif entry.type == "timer":
            coord.on_window_deadline(entry.index)
        elif entry.type == "interrupt":
            coord.deliver_interrupt(entry.index, entry.content)
        elif entry.type == "retry":
            assert entry.kind is not None
            self._attempt_agent(
                entry.kind, entry.pid, entry.index, entry.prompt, entry.history, entry.attempt
            )

    def _fanout(self, event: Event) -> None:
        for observer in self._observers:
            observer(event, self)

    def run(self, task: str) -> PlanResult:
        self.coordinator.start(task)
        while not self.coordinator.done:
            if not self.process_next():
                raise RuntimeError("virtual runtime stalled with pending plan")
        if self.coordinator.failed is not None:
            raise self.coordinator.failed
        return self.coordinator.result()


def run_plan(
    task: str,
    approx: VirtualAgent,
    target: VirtualAgent,
    executor: VirtualExecutor | None = None,
    config: EngineConfig | None = None,
    *,
    interrupts: Iterable[ScheduledInterrupt] = (),
    observers: Sequence[Observer] = (),
) -> PlanResult:
    """Run one speculative planning session under the virtual clock."""
    runtime = VirtualRuntime(
        approx,
        target,
        executor or PureExecutor(),
        config or EngineConfig(),
        interrupts=interrupts,
        observers=observers,
    )
    return runtime.run(task)
