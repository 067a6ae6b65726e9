"""Speculative planning engine: coordinator, matching, presentation, drivers."""

from specplan.engine.coordinator import PlanCoordinator, PlanResult
from specplan.engine.events import Event, EventLog, EventType
from specplan.engine.matching import (
    edit_distance,
    is_terminate,
    normalized_edit_distance,
    split_action,
    verify_step,
)
from specplan.engine.presentation import (
    InterruptKind,
    InterruptOutcome,
    PresentationState,
    UserInterrupt,
    apply_action,
    reschedule_next,
)
from specplan.engine.types import (
    EngineConfig,
    MatchKind,
    MatchPolicy,
    Observation,
    ProcessKind,
    ProcessRecord,
    ProcessStatus,
    Step,
    StepSource,
    Trajectory,
    TrajectoryEntry,
)
from specplan.engine.virtual import (
    AgentReply,
    ExecReply,
    PureExecutor,
    ScheduledInterrupt,
    VirtualAgent,
    VirtualExecutor,
    VirtualRuntime,
    run_plan,
)

__all__ = [
    "AgentReply",
    "EngineConfig",
    "Event",
    "EventLog",
    "EventType",
    "ExecReply",
    "InterruptKind",
    "InterruptOutcome",
    "MatchKind",
    "MatchPolicy",
    "Observation",
    "PlanCoordinator",
    "PlanResult",
    "PresentationState",
    "ProcessKind",
    "ProcessRecord",
    "ProcessStatus",
    "PureExecutor",
    "ScheduledInterrupt",
    "Step",
    "StepSource",
    "Trajectory",
    "TrajectoryEntry",
    "UserInterrupt",
    "VirtualAgent",
    "VirtualExecutor",
    "VirtualRuntime",
    "apply_action",
    "edit_distance",
    "is_terminate",
    "normalized_edit_distance",
    "reschedule_next",
    "run_plan",
    "split_action",
    "verify_step",
]
