"""Record/replay for chat backends: hermetic adapter tests without live APIs.

Cassettes are line-delimited JSON. Each line stores the request key (a hash of
style, model and messages; auth and timing never enter the key) and the
response triple. Repeated identical requests replay in recorded order.
"""

from __future__ import annotations

import asyncio
import enum
import hashlib
import json
from collections import deque
from pathlib import Path
from typing import Protocol

from specplan.adapters.remote import AgentEndpointConfig
from specplan.errors import CassetteMiss


class ChatBackend(Protocol):
    async def complete(
        self, config: AgentEndpointConfig, messages: list[dict[str, str]]
    ) -> tuple[str, int, int]: ...


class CassetteMode(enum.Enum):
    RECORD = "record"
    REPLAY = "replay"


def request_key(config: AgentEndpointConfig, messages: list[dict[str, str]]) -> str:
    body = json.dumps(
        {"style": config.style.value, "model": config.model_id, "messages": messages},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(body.encode()).hexdigest()


class RecordBackend:
    """Proxies a real backend and appends (key, response) pairs to the cassette."""

    def __init__(self, inner: ChatBackend, cassette_path: str | Path):
        self._inner = inner
        self._path = Path(cassette_path)
        self._lock = asyncio.Lock()

    async def complete(
        self, config: AgentEndpointConfig, messages: list[dict[str, str]]
    ) -> tuple[str, int, int]:
        text, prompt_tokens, completion_tokens = await self._inner.complete(config, messages)
        line = json.dumps(
            {
                "key": request_key(config, messages),
                "text": text,
                "prompt_tokens": prompt_tokens,
                "completion_tokens": completion_tokens,
            },
            separators=(",", ":"),
        )
        async with self._lock:
            with open(self._path, "a") as handle:
                handle.write(line + "\n")
        return text, prompt_tokens, completion_tokens


class ReplayBackend:
    """Serves recorded responses; an unmatched request is a hard miss."""

    def __init__(self, cassette_path: str | Path):
        path = Path(cassette_path)
        if not path.exists():
            raise CassetteMiss(f"cassette not found: {path}")
        self._responses: dict[str, deque[tuple[str, int, int]]] = {}
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            self._responses.setdefault(raw["key"], deque()).append(
                (raw["text"], int(raw["prompt_tokens"]), int(raw["completion_tokens"]))
            )
        self._lock = asyncio.Lock()

    async def complete(
        self, config: AgentEndpointConfig, messages: list[dict[str, str]]
    ) -> tuple[str, int, int]:
        key = request_key(config, messages)
        async with self._lock:
            queue = self._responses.get(key)
            if not queue:
                raise CassetteMiss(f"no recorded response for request {key[:12]}…")
            response = queue.popleft()
            if not queue:
                # Keep the last response around for idempotent re-reads of a
                # fully drained key within one session.
                queue.append(response)
        return response


def record_replay(
    mode: CassetteMode, cassette_path: str | Path, inner: ChatBackend | None = None
) -> ChatBackend:
    """Build a recording or replaying backend around `inner` (record mode)."""
    if mode is CassetteMode.RECORD:
        if inner is None:
            raise ValueError("record mode needs an inner backend to proxy")
        return RecordBackend(inner, cassette_path)
    return ReplayBackend(cassette_path)
