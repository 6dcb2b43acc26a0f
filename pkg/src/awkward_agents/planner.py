"""Per-agent reactive planner: drive selection, competence stepping, plan swaps.

The caller owns the clock and calls :func:`tick` once per update signal. Each
tick re-selects the highest-priority released drive, then advances that drive's
own resumable frame stack until it emits exactly one action or completes.
Drives that lose focus keep their stacks and resume where they stopped.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Protocol

from awkward_agents.behaviour_library import ActionStatus, PrimitiveFault
from awkward_agents.plan import (
    ActionPattern,
    ActionRef,
    Competence,
    DriveCollection,
    Plan,
    PlanValidationError,
    SenseRef,
    validate_plan,
)

SUCCESS = "success"
FAILURE = "failure"


class Primitives(Protocol):
    def sense(self, ref: SenseRef) -> bool: ...

    def act(self, ref: ActionRef) -> ActionStatus: ...


SenseFn = Callable[[SenseRef], bool]
ActFn = Callable[[ActionRef], ActionStatus]


@dataclass
class Frame:
    name: str
    kind: str  # "competence" | "action-pattern"
    cursor: int = 0


@dataclass
class DriveState:
    drive_name: str
    stack: list[Frame] = field(default_factory=list)
    status: str = "fresh"  # fresh | running | paused


@dataclass
class AgentMind:
    agent_id: str
    plan: Plan
    drive_states: dict[str, DriveState] = field(default_factory=dict)
    last_active_drive: str | None = None
    tick_count: int = 0
    archived_states: dict[str, DriveState] = field(default_factory=dict)

    def state_of(self, drive_name: str) -> DriveState:
        return self.drive_states.get(drive_name) or DriveState(drive_name)


@dataclass(frozen=True)
class TickResult:
    active_drive: str | None = None
    emitted_action: str | None = None
    drive_completed: tuple[str, str] | None = None
    sense_trace: tuple[tuple[str, bool], ...] = ()

    @property
    def completed(self) -> bool:
        return self.drive_completed is not None


@dataclass(frozen=True)
class StepOutcome:
    kind: str  # descend | goal-met | dead-end | emitted | pattern-complete | action-failed
    child: str | None = None
    action: str | None = None


def all_true(refs, sense: SenseFn) -> bool:
    # short-circuits, so later senses of a failed conjunction are never read
    return all(sense(r) for r in refs)


def select_drive(dc: DriveCollection, sense: SenseFn) -> int | None:
    """Index of the first drive whose release conjunction holds; lower drives are never examined."""
    for i, drive in enumerate(dc.drives):
        if all_true(drive.release, sense):
            return i
    return None


def step_competence(frame: Frame, competence: Competence, sense: SenseFn) -> StepOutcome:
    # an empty goal list means the competence has no success test
    if competence.goal and all_true(competence.goal, sense):
        return StepOutcome("goal-met")
    for i, element in enumerate(competence.elements):
        if all_true(element.condition, sense):
            frame.cursor = i
            return StepOutcome("descend", child=element.child)
    return StepOutcome("dead-end")


def step_action_pattern(frame: Frame, pattern: ActionPattern, act: ActFn) -> StepOutcome:
    if not 0 <= frame.cursor < len(pattern.actions):
        raise IndexError(f"cursor {frame.cursor} outside action pattern {pattern.name!r}")
    ref = pattern.actions[frame.cursor]
    status = act(ref)
    frame.cursor += 1
    if status is not ActionStatus.SUCCESS:
        return StepOutcome("action-failed", action=ref.name)
    if frame.cursor >= len(pattern.actions):
        return StepOutcome("pattern-complete", action=ref.name)
    return StepOutcome("emitted", action=ref.name)


class _Recorder:
    def __init__(self, prims: Primitives):
        self.prims = prims
        self.trace: list[tuple[str, bool]] = []

    def sense(self, ref: SenseRef) -> bool:
        value = self.prims.sense(ref)
        self.trace.append((str(ref), value))
        return value

    def act(self, ref: ActionRef) -> ActionStatus:
        return self.prims.act(ref)


def _stack_is_stale(plan: Plan, state: DriveState) -> bool:
    for frame in state.stack:
        if frame.kind == "competence" and frame.name not in plan.competences:
            return True
        if frame.kind == "action-pattern" and frame.name not in plan.action_patterns:
            return True
    return False


def tick(mind: AgentMind, prims: Primitives) -> TickResult:
    """Run one plan cycle for ``mind``.

    Raises :class:`PrimitiveFault` if a primitive faults; the mind is then left
    exactly as it was before the call.
    """
    rec = _Recorder(prims)
    plan = mind.plan
    idx = select_drive(plan.drive_collection, rec.sense)

    if idx is None:
        _pause(mind, None)
        mind.last_active_drive = None
        mind.tick_count += 1
        return TickResult(sense_trace=tuple(rec.trace))

    drive = plan.drives[idx]
    state = copy.deepcopy(mind.drive_states.get(drive.name)) or DriveState(drive.name)
    if _stack_is_stale(plan, state):
        state.stack.clear()
    if not state.stack:
        state.stack.append(Frame(drive.root, plan.kind_of(drive.root) or "competence"))
    state.status = "running"

    emitted: str | None = None
    outcome: str | None = None
    # descent depth is bounded by acyclicity; the guard only protects hand-built plans
    for _ in range(len(plan.competences) + 2):
        top = state.stack[-1]
        if top.kind == "competence":
            step = step_competence(top, plan.competences[top.name], rec.sense)
            if step.kind == "goal-met":
                if len(state.stack) == 1:
                    outcome = SUCCESS
                else:
                    state.stack.pop()
                break
            if step.kind == "dead-end":
                outcome = FAILURE
                break
            state.stack.append(Frame(step.child, plan.kind_of(step.child) or "competence"))
            continue
        step = step_action_pattern(top, plan.action_patterns[top.name], rec.act)
        emitted = step.action
        if step.kind == "action-failed":
            outcome = FAILURE
        elif step.kind == "pattern-complete":
            outcome = SUCCESS
        break

    # commit
    _pause(mind, drive.name)
    if outcome is not None:
        state = DriveState(drive.name)
    mind.drive_states[drive.name] = state
    mind.last_active_drive = drive.name
    mind.tick_count += 1
    return TickResult(
        active_drive=drive.name,
        emitted_action=emitted,
        drive_completed=(drive.name, outcome) if outcome else None,
        sense_trace=tuple(rec.trace),
    )


def _pause(mind: AgentMind, now_active: str | None) -> None:
    prev = mind.last_active_drive
    if prev is not None and prev != now_active and prev in mind.drive_states:
        st = mind.drive_states[prev]
        if st.stack:
            st.status = "paused"


def swap_plan(mind: AgentMind, new_plan: Plan, library=None) -> None:
    """Replace the mind's plan between ticks, keeping drive states by name."""
    report = validate_plan(new_plan, library)
    if report:
        raise PlanValidationError(report)
    names = {d.name for d in new_plan.drives}
    for name in list(mind.drive_states):
        if name not in names:
            mind.archived_states[name] = mind.drive_states.pop(name)
    for name in names:
        if name in mind.archived_states and name not in mind.drive_states:
            mind.drive_states[name] = mind.archived_states.pop(name)
    if mind.last_active_drive not in names:
        mind.last_active_drive = None
    mind.plan = new_plan


def trace_line(agent_id: str, tick_count: int, result: TickResult) -> str:
    """Tab-separated golden-trace line: tick, agent, drive, action, completion."""
    completion = f"{result.drive_completed[0]}:{result.drive_completed[1]}" if result.drive_completed else "-"
    return "\t".join(
        [str(tick_count), agent_id, result.active_drive or "-", result.emitted_action or "-", completion]
    )


__all__ = [
    "AgentMind",
    "DriveState",
    "Frame",
    "PrimitiveFault",
    "StepOutcome",
    "TickResult",
    "select_drive",
    "step_action_pattern",
    "step_competence",
    "swap_plan",
    "tick",
    "trace_line",
]
