"""Core data types for the speculative planning engine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class StepSource(enum.Enum):
    APPROXIMATION = "approximation"
    TARGET = "target"
    USER = "user"


class ProcessKind(enum.Enum):
    APPROXIMATION = "A"
    TARGET = "T"


class ProcessStatus(enum.Enum):
    RUNNING = "running"
    COMPLETED = "completed"
    CANCELLED = "cancelled"


@dataclass(frozen=True)
class Step:
    """One proposed plan action with provenance and accounting."""

    index: int
    content: str
    source: StepSource
    tokens: int = 0
    gen_duration: float = 0.0

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("step index must be >= 0")
        if self.tokens < 0:
            raise ValueError("tokens must be >= 0")
        if self.gen_duration < 0:
            raise ValueError("gen_duration must be >= 0")


@dataclass(frozen=True)
class Observation:
    """Result of executing a plan step."""

    content: str
    exec_duration: float = 0.0

    def __post_init__(self) -> None:
        if self.exec_duration < 0:
            raise ValueError("exec_duration must be >= 0")


@dataclass(frozen=True)
class TrajectoryEntry:
    step: Step
    observation: Observation


@dataclass
class Trajectory:
    """Ordered, committed (step, observation) pairs plus the evolving task prompt."""

    task: str
    entries: list[TrajectoryEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def contents(self) -> list[str]:
        return [entry.step.content for entry in self.entries]

    def sources(self) -> list[StepSource]:
        return [entry.step.source for entry in self.entries]

    def prompt(self) -> str:
        """Task prompt with one line per committed step, rebuilt from the entries."""
        lines = [self.task]
        for entry in self.entries:
            lines.append(
                f"Step {entry.step.index}: {entry.step.content} -> {entry.observation.content}"
            )
        return "\n".join(lines)

    def history(self) -> list[tuple[str, str]]:
        """(action, observation) pairs handed to agents as the current prefix."""
        return [(e.step.content, e.observation.content) for e in self.entries]


class MatchKind(enum.Enum):
    EXACT = "exact"
    SOFT = "soft"


@dataclass(frozen=True)
class MatchPolicy:
    """How an approximation step is verified against the target's step.

    Soft matching splits "Name[params]" actions: the name must match exactly
    (when function_name_exact), the parameter text may differ by a normalized
    edit distance below threshold.
    """

    kind: MatchKind = MatchKind.EXACT
    threshold: float = 0.3
    function_name_exact: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")


@dataclass(frozen=True)
class EngineConfig:
    k: int = 4
    max_steps: int = 30
    match_policy: MatchPolicy = field(default_factory=MatchPolicy)
    terminate_token: str = "terminate"
    # Duration of the post-presentation override window (seconds; virtual
    # seconds under simulation). The pending-target window needs no duration:
    # it closes when the target finishes.
    interrupt_window: float = 2.0
    allow_side_effects: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.interrupt_window < 0:
            raise ValueError("interrupt_window must be >= 0")
        if not self.terminate_token.strip():
            raise ValueError("terminate_token must be non-empty")


@dataclass
class ProcessRecord:
    """Lifecycle of one agent call issued by the engine."""

    pid: int
    kind: ProcessKind
    index: int
    start_time: float
    end_time: float | None = None
    status: ProcessStatus = ProcessStatus.RUNNING
    output: Step | None = None

    @property
    def running(self) -> bool:
        return self.status is ProcessStatus.RUNNING
