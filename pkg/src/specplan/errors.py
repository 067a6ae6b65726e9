"""Exception types shared across the package."""

from __future__ import annotations


class SpecPlanError(Exception):
    """Base class for all package-specific errors."""


class AgentError(SpecPlanError):
    """An agent call failed after exhausting its retries."""

    def __init__(self, index: int, message: str = "agent call failed"):
        super().__init__(f"{message} (step index {index})")
        self.index = index


class ExecutionError(SpecPlanError):
    """Executing a plan step failed."""

    def __init__(self, index: int, message: str = "step execution failed"):
        super().__init__(f"{message} (step index {index})")
        self.index = index


class ParseError(SpecPlanError):
    """An agent response could not be parsed into an action step."""

    def __init__(self, raw_text: str, message: str = "could not parse action"):
        super().__init__(message)
        self.raw_text = raw_text


class CassetteMiss(SpecPlanError):
    """Replay-mode adapter received a request absent from the cassette."""


class StaleInterrupt(SpecPlanError):
    """A user interrupt arrived for a window that is not open."""

    def __init__(self, index: int):
        super().__init__(f"no open interrupt window for step index {index}")
        self.index = index


class InvalidBreaks(SpecPlanError):
    """A breaking-point list violates its structural invariants."""
