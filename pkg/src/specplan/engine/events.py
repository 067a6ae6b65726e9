"""Append-only event log: the observability contract shared by analytics, the
session service, and the web UI.

Serialized form is line-delimited JSON, one event per line:

    {"t": <float seconds>, "type": <string>, "index": <int>, "kind": "A"|"T",
     "content": <string, optional>, "tokens": <int, optional>}
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Iterator


class EventType(str, enum.Enum):
    PROCESS_STARTED = "process_started"
    PROCESS_FINISHED = "process_finished"
    PROCESS_CANCELLED = "process_cancelled"
    STEP_VERIFIED = "step_verified"
    STEP_REJECTED = "step_rejected"
    STEP_EXECUTED = "step_executed"
    PRESENT_APPROX = "present_approx"
    PRESENT_TARGET = "present_target"
    WINDOW_OPEN = "window_open"
    WINDOW_CLOSED = "window_closed"
    USER_INTERRUPT = "user_interrupt"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class Event:
    t: float
    type: EventType
    index: int
    kind: str
    content: str | None = None
    tokens: int | None = None

    def payload(self) -> dict[str, object]:
        payload: dict[str, object] = {
            "t": self.t,
            "type": self.type.value,
            "index": self.index,
            "kind": self.kind,
        }
        if self.content is not None:
            payload["content"] = self.content
        if self.tokens is not None:
            payload["tokens"] = self.tokens
        return payload

    def to_json(self) -> str:
        return json.dumps(self.payload(), separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Event":
        raw = json.loads(line)
        return cls(
            t=float(raw["t"]),
            type=EventType(raw["type"]),
            index=int(raw["index"]),
            kind=str(raw["kind"]),
            content=raw.get("content"),
            tokens=raw.get("tokens"),
        )

    @property
    def t_us(self) -> int:
        """Timestamp in integer microseconds (exact for virtual-time logs)."""
        return round(self.t * 1_000_000)


class EventLog:
    """Totally ordered event sequence with nondecreasing timestamps."""

    def __init__(self, events: Iterable[Event] = ()):
        self._events: list[Event] = []
        for event in events:
            self.append(event)

    def append(self, event: Event) -> None:
        if self._events and event.t < self._events[-1].t:
            raise ValueError(
                f"event timestamps must be nondecreasing: {event.t} < {self._events[-1].t}"
            )
        self._events.append(event)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __getitem__(self, i: int) -> Event:
        return self._events[i]

    def of_type(self, *types: EventType) -> list[Event]:
        wanted = set(types)
        return [e for e in self._events if e.type in wanted]

    def to_jsonl(self) -> str:
        return "".join(event.to_json() + "\n" for event in self._events)

    @classmethod
    def from_jsonl(cls, text: str) -> "EventLog":
        log = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                log.append(Event.from_json(line))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"corrupt event log at line {lineno}: {exc}") from exc
        return log
