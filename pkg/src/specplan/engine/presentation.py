"""Serialized presentation of interleaved agent outputs.

Approximation and target results complete out of order; this scheduler decides
what the user sees next. Two trackers advance in lockstep: the approximation
step for index i is shown only once every earlier index is settled, and the
target (authoritative) step for index i is shown only after its approximation
counterpart, in strictly increasing index order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Protocol

from specplan.engine.types import Step, StepSource


class ActionKind(enum.Enum):
    PRESENT_APPROX = "present_approx"
    PRESENT_TARGET = "present_target"
    OPEN_WINDOW = "open_window"
    SKIP_APPROX = "skip_approx"


@dataclass(frozen=True)
class PresentationAction:
    kind: ActionKind
    index: int
    content: str = ""


class InterruptKind(enum.Enum):
    # Override the pending target step that the user is still waiting for.
    LATENCY_OVERRIDE = "latency_override"
    # Replace the just-presented target step during its brief override window.
    TARGET_OVERRIDE = "target_override"


@dataclass(frozen=True)
class UserInterrupt:
    kind: InterruptKind
    index: int
    content: str
    received_at: float

    def __post_init__(self) -> None:
        if not self.content.strip():
            raise ValueError("interrupt content must be non-empty")


class InterruptOutcome(enum.Enum):
    ACCEPTED = "accepted"
    STALE = "stale"


class ProgressView(Protocol):
    """What the scheduler may observe of the engine state."""

    def committed_step(self, index: int) -> Step | None: ...

    def settled_count(self) -> int: ...


@dataclass(frozen=True)
class PresentedEntry:
    source: StepSource
    index: int
    timestamp: float


@dataclass
class PresentationState:
    a_tracker: int = 0
    t_tracker: int = 0
    presented: list[PresentedEntry] = field(default_factory=list)
    pending_window: int | None = None

    def rewind_to(self, index: int) -> None:
        """Re-open presentation at `index` after an authoritative replacement
        invalidated everything beyond it (trackers never move past settled work
        twice for the target lane; only the approximation lane re-presents)."""
        self.a_tracker = min(self.a_tracker, index)
        self.t_tracker = min(self.t_tracker, index)
        self.pending_window = None


def reschedule_next(state: PresentationState, view: ProgressView) -> PresentationAction | None:
    """Pick the next presentation action, or None if nothing is ready.

    Callers apply the returned action and update the trackers via
    `apply_action`, then call again until None.
    """
    if state.pending_window is not None:
        index = state.pending_window
        return PresentationAction(ActionKind.OPEN_WINDOW, index)

    if state.a_tracker <= state.t_tracker:
        i = state.a_tracker
        step = view.committed_step(i)
        if step is None:
            return None
        if step.source is StepSource.APPROXIMATION and view.settled_count() >= i:
            return PresentationAction(ActionKind.PRESENT_APPROX, i, step.content)
        if step.source is not StepSource.APPROXIMATION and view.settled_count() > i:
            # No approximation output exists for this index (the target or the
            # user supplied it directly); the target presentation stands alone.
            return PresentationAction(ActionKind.SKIP_APPROX, i)
        return None

    i = state.t_tracker
    if view.settled_count() > i:
        step = view.committed_step(i)
        assert step is not None
        return PresentationAction(ActionKind.PRESENT_TARGET, i, step.content)
    return None


def apply_action(
    state: PresentationState,
    action: PresentationAction,
    *,
    now: float,
    target_pending: bool = False,
) -> None:
    """Advance trackers for an applied action; records presented entries."""
    if action.kind is ActionKind.PRESENT_APPROX:
        state.presented.append(PresentedEntry(StepSource.APPROXIMATION, action.index, now))
        state.a_tracker = action.index + 1
        if target_pending:
            state.pending_window = action.index
    elif action.kind is ActionKind.SKIP_APPROX:
        state.a_tracker = action.index + 1
    elif action.kind is ActionKind.PRESENT_TARGET:
        state.presented.append(PresentedEntry(StepSource.TARGET, action.index, now))
        state.t_tracker = action.index + 1
    elif action.kind is ActionKind.OPEN_WINDOW:
        state.pending_window = None
