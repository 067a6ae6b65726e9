"""Event log: canonical JSONL serialization, ordering invariants, parsing."""

from __future__ import annotations

import pytest

from specplan.engine.events import Event, EventLog, EventType


def test_jsonl_round_trip_is_byte_identical():
    log = EventLog(
        [
            Event(0.0, EventType.PROCESS_STARTED, 0, "A"),
            Event(0.0, EventType.PROCESS_STARTED, 0, "T"),
            Event(2.0, EventType.PROCESS_FINISHED, 0, "A", content="go", tokens=10),
            Event(2.0, EventType.STEP_EXECUTED, 0, "A", content="go"),
            Event(8.0, EventType.STEP_VERIFIED, 0, "T", content="go"),
            Event(8.0, EventType.TERMINATED, 0, "T"),
        ]
    )
    text = log.to_jsonl()
    assert EventLog.from_jsonl(text).to_jsonl() == text
    first = text.splitlines()[0]
    assert first == '{"t":0.0,"type":"process_started","index":0,"kind":"A"}'


def test_optional_fields_omitted_from_serialization():
    bare = Event(1.5, EventType.WINDOW_OPEN, 3, "T")
    assert "content" not in bare.to_json()
    assert "tokens" not in bare.to_json()
    rich = Event(1.5, EventType.PROCESS_FINISHED, 3, "T", content="x", tokens=7)
    assert '"content":"x"' in rich.to_json()
    assert '"tokens":7' in rich.to_json()


def test_timestamps_must_be_nondecreasing():
    log = EventLog([Event(5.0, EventType.PROCESS_STARTED, 0, "A")])
    with pytest.raises(ValueError):
        log.append(Event(4.0, EventType.PROCESS_FINISHED, 0, "A"))
    log.append(Event(5.0, EventType.PROCESS_FINISHED, 0, "A"))  # ties are fine


def test_corrupt_lines_report_position():
    with pytest.raises(ValueError, match="line 2"):
        EventLog.from_jsonl('{"t":0.0,"type":"terminated","index":0,"kind":"T"}\n{broken\n')
    with pytest.raises(ValueError, match="line 1"):
        EventLog.from_jsonl('{"t":0.0,"type":"not_a_type","index":0,"kind":"T"}\n')


def test_blank_lines_are_skipped():
    text = '{"t":0.0,"type":"terminated","index":0,"kind":"T"}\n\n'
    assert len(EventLog.from_jsonl(text)) == 1


def test_microsecond_round_trip():
    event = Event(26.0, EventType.TERMINATED, 9, "T")
    assert event.t_us == 26_000_000
    fractional = Event(0.123456, EventType.TERMINATED, 0, "T")
    assert fractional.t_us == 123456
