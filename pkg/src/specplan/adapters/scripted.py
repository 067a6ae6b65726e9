"""Scripted fixture agents for deterministic engine tests."""

from __future__ import annotations

import asyncio
from typing import Mapping, Sequence

from specplan.engine.virtual import AgentReply


def scripted_reply(content: str, tokens: int = 10, latency: float = 1.0) -> AgentReply:
    return AgentReply(content, tokens, latency)


class ScriptedAgent:
    """Replies by step index; repeated proposals at one index walk the list
    and stick on its last entry. Indices beyond the script yield `default`."""

    def __init__(
        self,
        script: Mapping[int, Sequence[AgentReply]] | Sequence[AgentReply],
        default: AgentReply | None = None,
    ):
        if isinstance(script, Mapping):
            self._script = {i: list(replies) for i, replies in script.items()}
        else:
            self._script = {i: [reply] for i, reply in enumerate(script)}
        self._default = default or scripted_reply("terminate")
        self._attempts: dict[int, int] = {}
        self.calls = 0

    def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        self.calls += 1
        index = len(history)
        replies = self._script.get(index)
        if not replies:
            return self._default
        attempt = self._attempts.get(index, 0)
        self._attempts[index] = attempt + 1
        return replies[min(attempt, len(replies) - 1)]


class FlakyAgent:
    """Raises for the first `failures` proposals, then delegates."""

    def __init__(self, inner: ScriptedAgent, failures: int):
        self._inner = inner
        self._failures = failures
        self.calls = 0

    def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        self.calls += 1
        if self.calls <= self._failures:
            raise RuntimeError("scripted transport failure")
        return self._inner.propose(prompt, history)


class ScriptedAsyncAgent:
    """Async wrapper over a scripted agent; latency shrinks by `time_scale`
    so wall-clock tests stay fast."""

    def __init__(self, inner: ScriptedAgent, time_scale: float = 0.01):
        self._inner = inner
        self._time_scale = time_scale

    async def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        reply = self._inner.propose(prompt, history)
        await asyncio.sleep(reply.latency * self._time_scale)
        return reply
