"""Speculative agent planning: draft/verify engine, analytics, simulator, service."""

from specplan.engine import (
    EngineConfig,
    EventLog,
    MatchKind,
    MatchPolicy,
    PlanResult,
    Step,
    StepSource,
    Trajectory,
    run_plan,
)

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "EventLog",
    "MatchKind",
    "MatchPolicy",
    "PlanResult",
    "Step",
    "StepSource",
    "Trajectory",
    "run_plan",
    "__version__",
]
