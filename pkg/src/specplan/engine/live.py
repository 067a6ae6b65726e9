"""Wall-clock asyncio driver for the planning coordinator.

Agent calls run as tasks; completions, failures, timer fires and user
interrupts all funnel through one ordered queue, so coordinator state is only
ever touched from the driver loop. Cancellation is cooperative via
``asyncio.Task.cancel``; a cancelled call abandons its request at the next
await point and contributes no tokens.
"""

from __future__ import annotations

import asyncio
import time
from typing import Any, Callable, Protocol, Sequence

from specplan.engine.coordinator import PlanCoordinator, PlanResult
from specplan.engine.events import Event
from specplan.engine.presentation import InterruptOutcome
from specplan.engine.types import EngineConfig, ProcessKind, Step
from specplan.engine.virtual import RETRY_BACKOFF_S, RETRY_LIMIT, AgentReply, ExecReply
from specplan.errors import AgentError, ExecutionError


class LiveAgent(Protocol):
    async def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply: ...


class LiveExecutor(Protocol):
    side_effecting: bool

    async def execute(self, step: Step, history: Sequence[tuple[str, str]]) -> ExecReply: ...


class PureAsyncExecutor:
    side_effecting = False

    async def execute(self, step: Step, history: Sequence[tuple[str, str]]) -> ExecReply:
        return ExecReply(content=f"ok[{step.index}]", duration=0.0)


class AsyncRuntime:
    """RuntimePort implementation on asyncio and the wall clock."""

    def __init__(
        self,
        approx: LiveAgent,
        target: LiveAgent,
        executor: LiveExecutor | None = None,
        config: EngineConfig | None = None,
        *,
        on_event: Callable[[Event], None] | None = None,
    ):
        executor = executor or PureAsyncExecutor()
        config = config or EngineConfig()
        if getattr(executor, "side_effecting", False) and not config.allow_side_effects:
            raise ValueError(
                "side-effecting executors must be enabled via EngineConfig.allow_side_effects"
            )
        self._approx = approx
        self._target = target
        self._executor = executor
        self._queue: asyncio.Queue[tuple[Any, ...]] = asyncio.Queue()
        self._tasks: dict[int, asyncio.Task] = {}
        self._timer_tasks: dict[int, asyncio.Task] = {}
        self._next_timer = 0
        self._origin = time.monotonic()
        self.coordinator = PlanCoordinator(config, self, on_event=on_event)

    # ---- RuntimePort ----

    def now_us(self) -> int:
        return round((time.monotonic() - self._origin) * 1_000_000)

    def launch_agent(
        self,
        kind: ProcessKind,
        pid: int,
        index: int,
        prompt: str,
        history: list[tuple[str, str]],
    ) -> None:
        agent = self._approx if kind is ProcessKind.APPROXIMATION else self._target
        self._tasks[pid] = asyncio.create_task(
            self._agent_call(pid, agent, index, prompt, list(history))
        )

    def launch_exec(self, pid: int, step: Step, history: list[tuple[str, str]]) -> None:
        self._tasks[pid] = asyncio.create_task(self._exec_call(pid, step, list(history)))

    def start_timer(self, delay_us: int, index: int) -> int:
        timer_id = self._next_timer
        self._next_timer += 1
        self._timer_tasks[timer_id] = asyncio.create_task(self._timer(delay_us, index))
        return timer_id

    def cancel_process(self, pid: int) -> None:
        task = self._tasks.pop(pid, None)
        if task is not None:
            task.cancel()

    def cancel_timer(self, timer_id: int) -> None:
        task = self._timer_tasks.pop(timer_id, None)
        if task is not None:
            task.cancel()

    # ---- task bodies ----

    async def _agent_call(
        self,
        pid: int,
        agent: LiveAgent,
        index: int,
        prompt: str,
        history: list[tuple[str, str]],
    ) -> None:
        attempt = 0
        while True:
            try:
                reply = await agent.propose(prompt, history)
            except asyncio.CancelledError:
                raise
            except Exception as exc:
                attempt += 1
                if attempt > RETRY_LIMIT:
                    self._queue.put_nowait(("agent_failed", pid, AgentError(index, str(exc))))
                    return
                await asyncio.sleep(RETRY_BACKOFF_S)
                continue
            self._queue.put_nowait(("agent_done", pid, reply))
            return

    async def _exec_call(self, pid: int, step: Step, history: list[tuple[str, str]]) -> None:
        try:
            reply = await self._executor.execute(step, history)
        except asyncio.CancelledError:
            raise
        except Exception:
            self._queue.put_nowait(("exec_failed", pid, ExecutionError(step.index)))
            return
        self._queue.put_nowait(("exec_done", pid, reply))

    async def _timer(self, delay_us: int, index: int) -> None:
        await asyncio.sleep(delay_us / 1_000_000)
        self._queue.put_nowait(("timer", index))

    # ---- interrupts ----

    async def interrupt(self, index: int, content: str) -> InterruptOutcome:
        future: asyncio.Future[InterruptOutcome] = asyncio.get_running_loop().create_future()
        self._queue.put_nowait(("interrupt", index, content, future))
        return await future

    # ---- driving ----

    async def run(self, task: str) -> PlanResult:
        self.coordinator.start(task)
        try:
            while not self.coordinator.done:
                msg = await self._queue.get()
                self._dispatch(msg)
        finally:
            await self._shutdown()
        if self.coordinator.failed is not None:
            raise self.coordinator.failed
        return self.coordinator.result()

    def _dispatch(self, msg: tuple[Any, ...]) -> None:
        coord = self.coordinator
        if msg[0] == "agent_done":
            _, pid, reply = msg
            self._tasks.pop(pid, None)
            coord.on_agent_done(pid, reply.content, reply.tokens)
        elif msg[0] == "agent_failed":
            _, pid, error = msg
            self._tasks.pop(pid, None)
            coord.on_agent_failed(pid, error)
        elif msg[0] == "exec_done":
            _, pid, reply = msg
            self._tasks.pop(pid, None)
            coord.on_exec_done(pid, reply.content, reply.duration)
        elif msg[0] == "exec_failed":
            _, pid, error = msg
            self._tasks.pop(pid, None)
            coord.on_exec_failed(pid, error)
        elif msg[0] == "timer":
            coord.on_window_deadline(msg[1])
        elif msg[0] == "interrupt":
            _, index, content, future = msg
            outcome = coord.deliver_interrupt(index, content)
            if not future.done():
                future.set_result(outcome)

    async def _shutdown(self) -> None:
        pending = list(self._tasks.values()) + list(self._timer_tasks.values())
        self._tasks.clear()
        self._timer_tasks.clear()
        for task in pending:
            task.cancel()
        if pending:
            await asyncio.gather(*pending, return_exceptions=True)


async def run_plan_live(
    task: str,
    approx: LiveAgent,
    target: LiveAgent,
    executor: LiveExecutor | None = None,
    config: EngineConfig | None = None,
    *,
    on_event: Callable[[Event], None] | None = None,
) -> PlanResult:
    """Run one speculative planning session on the wall clock."""
    runtime = AsyncRuntime(approx, target, executor, config, on_event=on_event)
    return await runtime.run(task)
