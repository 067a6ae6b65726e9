"""Session lifecycle: one planning run per session, streamed to subscribers.

A simulated session drives the virtual runtime event by event, pacing the
virtual clock against the wall clock (``scale`` wall seconds per virtual
second; zero free-runs). In paused mode the clock freezes whenever an
interrupt window opens, until a client interrupt lands or an explicit advance
arrives — interrupt races then become deterministic. Live sessions run the
asyncio engine against remote adapters.

Subscribers read an append-only event buffer; sequence numbers are buffer
positions, so reconnecting readers resume loss- and duplicate-free.
"""

from __future__ import annotations

import asyncio
import enum
import uuid
from pathlib import Path
from typing import TYPE_CHECKING, Callable

from specplan.adapters.remote import RemoteAgent
from specplan.analytics import MetricsReport, measure_metrics
from specplan.engine.events import Event, EventLog, EventType
from specplan.engine.live import AsyncRuntime, PureAsyncExecutor
from specplan.engine.presentation import InterruptOutcome
from specplan.engine.virtual import PureExecutor, VirtualRuntime
from specplan.simkit import make_sim_agents
from specplan.engine.types import ProcessKind

if TYPE_CHECKING:
    from specplan.adapters.cassette import ChatBackend
    from specplan.service.schemas import CreateSessionRequest

BackendFactory = Callable[[object], "ChatBackend"]


class SessionStatus(str, enum.Enum):
    RUNNING = "running"
    AWAITING_WINDOW = "awaiting_interrupt_window"
    COMPLETED = "completed"
    FAILED = "failed"


class Session:
    def __init__(
        self,
        request: "CreateSessionRequest",
        *,
        persist_path: Path | None = None,
        backend_factory: BackendFactory | None = None,
    ):
        self.id = uuid.uuid4().hex
        self.request = request
        self.status = SessionStatus.RUNNING
        self.events: list[Event] = []
        self.overflowed = False
        self._persist_path = persist_path
        self._backend_factory = backend_factory
        self._change = asyncio.Event()
        self._inbox: asyncio.Queue[tuple] = asyncio.Queue()
        self._windows_opened = 0
        self._windows_acked = 0
        self._virtual: VirtualRuntime | None = None
        self._live: AsyncRuntime | None = None
        self._task: asyncio.Task | None = None

    # ---- event buffer ----

    @property
    def finished(self) -> bool:
        return self.status in (SessionStatus.COMPLETED, SessionStatus.FAILED)

    def change_marker(self) -> asyncio.Event:
        return self._change

    def _notify(self) -> None:
        previous = self._change
        self._change = asyncio.Event()
        previous.set()

    def _push_event(self, event: Event) -> None:
        self.events.append(event)
        if event.type is EventType.WINDOW_OPEN:
            self._windows_opened += 1
        if self._persist_path is not None:
            with open(self._persist_path, "a") as handle:
                handle.write(event.to_json() + "\n")
        self._notify()

    def event_log(self) -> EventLog:
        return EventLog(self.events)

    def metrics(self) -> MetricsReport:
        return measure_metrics(self.event_log(), self.request.prices.to_table())

    # ---- lifecycle ----

    def launch(self) -> None:
        runner = self._run_live if self.request.mode == "live" else self._run_simulated
        self._task = asyncio.create_task(runner())

    async def interrupt(self, index: int, content: str) -> InterruptOutcome:
        if self.finished:
            return InterruptOutcome.STALE
        if self._live is not None:
            return await self._live.interrupt(index, content)
        future: asyncio.Future[InterruptOutcome] = asyncio.get_running_loop().create_future()
        self._inbox.put_nowait(("interrupt", index, content, future))
        return await future

    async def advance(self) -> bool:
        """Resume a paused session past its currently open window."""
        if self.finished or self.request.mode == "live":
            return False
        future: asyncio.Future[bool] = asyncio.get_running_loop().create_future()
        self._inbox.put_nowait(("advance", future))
        return await future

    # ---- simulated runner ----

    def _pause_pending(self) -> bool:
        if not self.request.pacing.paused or self._virtual is None:
            return False
        if self._windows_opened <= self._windows_acked:
            return False
        if not self._virtual.coordinator.open_windows:
            # The window resolved within the same step; nothing to hold open.
            self._windows_acked = self._windows_opened
            return False
        return True

    def _handle_command(self, command: tuple) -> None:
        assert self._virtual is not None
        if command[0] == "interrupt":
            _, index, content, future = command
            outcome = self._virtual.inject_interrupt(index, content)
            if outcome is InterruptOutcome.ACCEPTED:
                self._windows_acked = self._windows_opened
            if not future.done():
                future.set_result(outcome)
        else:
            _, future = command
            self._windows_acked = self._windows_opened
            if not future.done():
                future.set_result(True)

    async def _run_simulated(self) -> None:
        request = self.request
        world = request.world.to_sim()
        approx, target = make_sim_agents(
            world,
            request.approx.to_sim(ProcessKind.APPROXIMATION),
            request.target.to_sim(ProcessKind.TARGET),
        )
        runtime = VirtualRuntime(
            approx,
            target,
            PureExecutor(world.exec_time),
            request.config.to_engine(),
            observers=[lambda event, _runtime: self._push_event(event)],
        )
        self._virtual = runtime
        coordinator = runtime.coordinator
        scale = request.pacing.scale
        try:
            coordinator.start(request.task or f"simulated task ({world.n} steps)")
            while not coordinator.done:
                while not self._inbox.empty():
                    self._handle_command(self._inbox.get_nowait())
                if coordinator.done:
                    break
                if self._pause_pending():
                    self._set_status(SessionStatus.AWAITING_WINDOW)
                    self._handle_command(await self._inbox.get())
                    continue
                self._set_status(SessionStatus.RUNNING)
                next_us = runtime.next_time_us()
                if next_us is None:
                    break
                if scale > 0:
                    delay = (next_us - runtime.now_us()) / 1_000_000 * scale
                    if delay > 0:
                        try:
                            command = await asyncio.wait_for(self._inbox.get(), timeout=delay)
                        except asyncio.TimeoutError:
                            pass
                        else:
                            self._handle_command(command)
                            continue
                runtime.process_next()
            self.overflowed = coordinator.overflowed
            self._set_status(
                SessionStatus.FAILED if coordinator.failed else SessionStatus.COMPLETED
            )
        except Exception:
            self._set_status(SessionStatus.FAILED)
        finally:
            self._drain_inbox()
            self._notify()

    # ---- live runner ----

    async def _run_live(self) -> None:
        request = self.request
        if request.approx_endpoint is None or request.target_endpoint is None:
            self._set_status(SessionStatus.FAILED)
            self._notify()
            return
        factory = self._backend_factory
        approx_cfg = request.approx_endpoint.to_config()
        target_cfg = request.target_endpoint.to_config()
        approx = RemoteAgent(approx_cfg, factory(approx_cfg) if factory else None)
        target = RemoteAgent(target_cfg, factory(target_cfg) if factory else None)
        runtime = AsyncRuntime(
            approx,
            target,
            PureAsyncExecutor(),
            request.config.to_engine(),
            on_event=self._push_event,
        )
        self._live = runtime
        try:
            result = await runtime.run(request.task or "live task")
            self.overflowed = result.overflowed
            self._set_status(SessionStatus.COMPLETED)
        except Exception:
            self._set_status(SessionStatus.FAILED)
        finally:
            self._notify()

    def _set_status(self, status: SessionStatus) -> None:
        if self.status != status:
            self.status = status

    def _drain_inbox(self) -> None:
        while not self._inbox.empty():
            command = self._inbox.get_nowait()
            future = command[-1]
            if not future.done():
                if command[0] == "interrupt":
                    future.set_result(InterruptOutcome.STALE)
                else:
                    future.set_result(False)


class SessionManager:
    def __init__(self, *, persist_dir: str | Path | None = None,
                 backend_factory: BackendFactory | None = None):
        self.sessions: dict[str, Session] = {}
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self.backend_factory = backend_factory
        if self.persist_dir is not None:
            self.persist_dir.mkdir(parents=True, exist_ok=True)

    def create(self, request: "CreateSessionRequest") -> Session:
        session = Session(
            request,
            persist_path=None,
            backend_factory=self.backend_factory,
        )
        if self.persist_dir is not None:
            session._persist_path = self.persist_dir / f"{session.id}.jsonl"
        self.sessions[session.id] = session
        session.launch()
        return session

    def get(self, session_id: str) -> Session | None:
        return self.sessions.get(session_id)
