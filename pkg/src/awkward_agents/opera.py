"""Organisational norm layer: roles, deontic norms, interaction scenes, enforcement.

Each agent owns one :class:`OperaAgent`. It watches scene landmarks/results
through the agent's own senses, checks the agent's active drive against the
norms of every running scene, and repairs violations by re-ordering the
agent's drive collection:

* ``OBLIGED(b)``  -- the drive labelled ``b`` moves up one slot per iteration
  until it is the one selected;
* ``NOT_PERMITTED(b)`` -- the drive labelled ``b`` is taken out of the drive
  collection and parked with the scene; it comes back when the scene ends;
* ``PERMITTED(b)`` -- informational, never changes the plan.

When the last scene that changed the plan terminates, the drive collection is
put back exactly as it was before that first change.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence

from awkward_agents.plan import (
    Drive,
    DriveNotFoundError,
    InvariantFloorError,
    Plan,
    SchemaError,
    SenseRef,
    find_drive_by_behaviour,
    move_drive,
    parse_senses,
    remove_drive,
)
from awkward_agents.planner import AgentMind, TickResult, all_true, select_drive, swap_plan

log = logging.getLogger(__name__)

SenseFn = Callable[[SenseRef], bool]


class OrganisationError(ValueError):
    pass


class OrganisationSyntaxError(OrganisationError):
    pass


class OrganisationSchemaError(OrganisationError):
    pass


class UnknownSenseError(OrganisationError):
    pass


class UnknownBehaviourError(OrganisationError):
    pass


class UnknownDeonticOperator(OrganisationError):
    pass


class Deontic(str, enum.Enum):
    OBLIGED = "OBLIGED"
    NOT_PERMITTED = "NOT_PERMITTED"
    PERMITTED = "PERMITTED"

    @classmethod
    def parse(cls, raw: Any) -> Deontic:
        try:
            return cls(raw)
        except ValueError:
            raise UnknownDeonticOperator(f"unknown deontic operator {raw!r}") from None


@dataclass(frozen=True)
class NormSpec:
    name: str
    behaviour: str
    operator: Deontic
    condition: tuple[SenseRef, ...] = ()


@dataclass(frozen=True)
class ConditionalNorm:
    guard: tuple[SenseRef, ...]
    then_norm: NormSpec
    else_norm: NormSpec | None = None


@dataclass(frozen=True)
class RoleSpec:
    role_id: str
    objectives: tuple[str, ...] = ()
    sub_objectives: tuple[str, ...] = ()
    rights: tuple[str, ...] = ()
    rules: tuple[NormSpec, ...] = ()


@dataclass(frozen=True)
class SceneSpec:
    scene_id: str
    roles: tuple[str, ...]
    landmarks: tuple[SenseRef, ...]
    results: tuple[SenseRef, ...]
    rules: tuple[ConditionalNorm, ...] = ()


@dataclass
class SceneInstance:
    spec: SceneSpec
    status: str = "inactive"  # inactive | active
    activated_at_tick: int | None = None
    original_plan_order: tuple[Drive, ...] | None = None
    archived: list[Drive] = field(default_factory=list)

    @property
    def active(self) -> bool:
        return self.status == "active"

    @property
    def scene_id(self) -> str:
        return self.spec.scene_id


@dataclass(frozen=True)
class ViolationReport:
    norm: str
    operator: Deontic
    expected: str
    observed: str | None
    tick: int
    scene_id: str | None = None


@dataclass(frozen=True)
class SceneEvent:
    scene_id: str
    kind: str  # activated | terminated
    tick: int


@dataclass(frozen=True)
class EnforcementRecord:
    tick: int
    agent_id: str
    scene_id: str
    norm: str
    action: str  # moveUp | remove | reinsert | restore | wouldEnforce | unenforceable | suppressed
    plan_order_after: tuple[str, ...]
    intended: str | None = None

    def to_dict(self) -> dict:
        out = {
            "tick": self.tick,
            "agentId": self.agent_id,
            "sceneId": self.scene_id,
            "norm": self.norm,
            "action": self.action,
            "planOrderAfter": list(self.plan_order_after),
        }
        if self.intended is not None:
            out["intended"] = self.intended
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


@dataclass(frozen=True)
class Organisation:
    roles: dict[str, RoleSpec]
    scenes: tuple[SceneSpec, ...]
    norms: dict[str, NormSpec]

    def scenes_for(self, role_id: str) -> list[SceneSpec]:
        return [s for s in self.scenes if role_id in s.roles]


# ---------------------------------------------------------------------------
# loading


def _json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise OrganisationSyntaxError(f"malformed {what}: {exc}") from exc


def _req(obj: Any, key: str, kind: type, where: str) -> Any:
    if not isinstance(obj, dict):
        raise OrganisationSchemaError(f"{where}: expected an object")
    if key not in obj:
        raise OrganisationSchemaError(f"{where}: missing field {key!r}")
    if not isinstance(obj[key], kind):
        names = kind.__name__ if isinstance(kind, type) else " or ".join(k.__name__ for k in kind)
        raise OrganisationSchemaError(f"{where}.{key}: expected {names}")
    return obj[key]


def _texts(obj: dict, key: str, where: str) -> tuple[str, ...]:
    raw = obj.get(key, [])
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise OrganisationSchemaError(f"{where}.{key}: expected a list of strings")
    return tuple(raw)


def _senses(raw: Any, where: str) -> tuple[SenseRef, ...]:
    try:
        return parse_senses(raw, where)
    except SchemaError as exc:
        raise OrganisationSchemaError(str(exc)) from None


def _norm(raw: Any, where: str, library: dict[str, NormSpec], default_name: str) -> NormSpec:
    if isinstance(raw, str):
        try:
            return library[raw]
        except KeyError:
            raise OrganisationSchemaError(f"{where}: unknown norm {raw!r}") from None
    behaviour = _req(raw, "behaviour", str, where)
    if not behaviour:
        raise OrganisationSchemaError(f"{where}: empty behaviour label")
    operator = Deontic.parse(_req(raw, "operator", str, where))
    name = raw.get("name") or default_name
    return NormSpec(name, behaviour, operator, _senses(raw.get("condition", []), f"{where}.condition"))


def load_organisation(
    role_text: str,
    scene_text: str,
    norm_text: str | None = None,
    *,
    library=None,
    behaviours: Iterable[str] | None = None,
) -> Organisation:
    """Parse role, scene and (optional) named-norm files.

    ``library`` (a :class:`PrimitiveCatalog`) and ``behaviours`` (drive labels),
    when given, are used to check that every sense and behaviour resolves.
    """
    norms: dict[str, NormSpec] = {}
    if norm_text is not None:
        raw_norms = _json(norm_text, "norm file")
        if not isinstance(raw_norms, list):
            raise OrganisationSchemaError("norm file: expected a list")
        for i, raw in enumerate(raw_norms):
            n = _norm(raw, f"norms[{i}]", {}, "")
            if not n.name:
                raise OrganisationSchemaError(f"norms[{i}]: named norms need a name")
            if n.name in norms:
                raise OrganisationSchemaError(f"norms[{i}]: duplicate norm {n.name!r}")
            norms[n.name] = n

    raw_roles = _json(role_text, "role file")
    if not isinstance(raw_roles, list):
        raise OrganisationSchemaError("role file: expected a list")
    roles: dict[str, RoleSpec] = {}
    for i, raw in enumerate(raw_roles):
        where = f"roles[{i}]"
        role_id = _req(raw, "roleId", str, where)
        if not role_id or role_id in roles:
            raise OrganisationSchemaError(f"{where}: roleId {role_id!r} empty or duplicated")
        rules = tuple(
            _norm(r, f"{where}.rules[{j}]", norms, f"{role_id}.rule{j}") for j, r in enumerate(raw.get("rules", []))
        )
        roles[role_id] = RoleSpec(
            role_id, _texts(raw, "objectives", where), _texts(raw, "subObjectives", where), _texts(raw, "rights", where), rules
        )

    raw_scenes = _json(scene_text, "scene file")
    if not isinstance(raw_scenes, list):
        raise OrganisationSchemaError("scene file: expected a list")
    scenes: list[SceneSpec] = []
    for i, raw in enumerate(raw_scenes):
        where = f"scenes[{i}]"
        scene_id = _req(raw, "sceneId", str, where)
        if not scene_id or any(s.scene_id == scene_id for s in scenes):
            raise OrganisationSchemaError(f"{where}: sceneId {scene_id!r} empty or duplicated")
        landmarks = _senses(_req(raw, "landmarks", list, where), f"{where}.landmarks")
        results = _senses(_req(raw, "results", list, where), f"{where}.results")
        if not landmarks or not results:
            raise OrganisationSchemaError(f"{where}: landmarks and results must be non-empty")
        scene_roles = _texts(raw, "roles", where)
        for r in scene_roles:
            if r not in roles:
                raise OrganisationSchemaError(f"{where}: unknown role {r!r}")
        rules = []
        for j, rr in enumerate(raw.get("rules", [])):
            rw = f"{where}.rules[{j}]"
            guard = _senses(rr.get("guard", []) if isinstance(rr, dict) else None, f"{rw}.guard")
            then_norm = _norm(_req(rr, "then", (dict, str), rw), f"{rw}.then", norms, f"{scene_id}.rule{j}.then")
            else_raw = rr.get("else")
            else_norm = None if else_raw is None else _norm(else_raw, f"{rw}.else", norms, f"{scene_id}.rule{j}.else")
            rules.append(ConditionalNorm(guard, then_norm, else_norm))
        scenes.append(SceneSpec(scene_id, scene_roles, landmarks, results, tuple(rules)))

    org = Organisation(roles, tuple(scenes), norms)
    _check_references(org, library, None if behaviours is None else set(behaviours))
    return org


def _org_norms(org: Organisation) -> Iterable[tuple[str, NormSpec]]:
    for n in org.norms.values():
        yield f"norm {n.name!r}", n
    for role in org.roles.values():
        for n in role.rules:
            yield f"role {role.role_id!r}", n
    for scene in org.scenes:
        for rule in scene.rules:
            yield f"scene {scene.scene_id!r}", rule.then_norm
            if rule.else_norm is not None:
                yield f"scene {scene.scene_id!r}", rule.else_norm


def _check_references(org: Organisation, library, behaviours: set[str] | None) -> None:
    senses: list[tuple[str, SenseRef]] = []
    for where, n in _org_norms(org):
        senses += [(where, s) for s in n.condition]
        if behaviours is not None and n.behaviour not in behaviours:
            raise UnknownBehaviourError(f"{where}: behaviour {n.behaviour!r} matches no drive")
    for scene in org.scenes:
        where = f"scene {scene.scene_id!r}"
        senses += [(where, s) for s in scene.landmarks + scene.results]
        for rule in scene.rules:
            senses += [(where, s) for s in rule.guard]
    if library is not None:
        for where, s in senses:
            if not library.has_sense(s.name):
                raise UnknownSenseError(f"{where}: sense {s.name!r} is not in the behaviour library")


# ---------------------------------------------------------------------------
# scene tracking and norm checks


def update_scenes(instances: Sequence[SceneInstance], sense: SenseFn, tick: int) -> list[SceneEvent]:
    """Flip scenes whose landmarks (start) or results (end) all hold right now."""
    events = []
    for inst in instances:
        if not inst.active:
            if all_true(inst.spec.landmarks, sense):
                inst.status = "active"
                inst.activated_at_tick = tick
                events.append(SceneEvent(inst.scene_id, "activated", tick))
        elif all_true(inst.spec.results, sense):
            inst.status = "inactive"
            inst.activated_at_tick = None
            events.append(SceneEvent(inst.scene_id, "terminated", tick))
    return events


def behaviour_of(plan: Plan, drive_name: str | None) -> str | None:
    if drive_name is None:
        return None
    for d in plan.drives:
        if d.name == drive_name:
            return d.behaviour
    # drive left the plan since it ran; fall back to its name
    return drive_name


def norm_violated(norm: NormSpec, active_behaviour: str | None, plan: Plan, sense: SenseFn) -> bool:
    if norm.operator is Deontic.PERMITTED:
        return False
    if norm.operator is Deontic.NOT_PERMITTED:
        return active_behaviour == norm.behaviour
    if active_behaviour == norm.behaviour:
        return False
    try:
        target = plan.drives[find_drive_by_behaviour(plan, norm.behaviour)]
    except DriveNotFoundError:
        return True
    # an obligation only binds while the obliged drive could actually run
    return all_true(target.release, sense)


def _report(norm: NormSpec, observed: str | None, tick: int, scene_id: str | None) -> ViolationReport:
    return ViolationReport(norm.name, norm.operator, norm.behaviour, observed, tick, scene_id)


def applicable_norms(scene: SceneSpec, sense: SenseFn) -> list[NormSpec]:
    picked = []
    for rule in scene.rules:
        norm = rule.then_norm if all_true(rule.guard, sense) else rule.else_norm
        if norm is not None and all_true(norm.condition, sense):
            picked.append(norm)
    return picked


def evaluate_norms(
    scene: SceneInstance,
    sense: SenseFn,
    active_behaviour: str | None,
    plan: Plan,
    tick: int = 0,
) -> list[ViolationReport]:
    """Violations of the running scene's norms by the currently active drive.

    Prohibitions are listed before obligations. An obligation on a behaviour
    that the same scene also prohibits is dropped (the prohibition wins).
    """
    if not scene.active:
        return []
    norms = applicable_norms(scene.spec, sense)
    forbidden = {n.behaviour for n in norms if n.operator is Deontic.NOT_PERMITTED}
    prohibitions, obligations = [], []
    for n in norms:
        if n.operator is Deontic.OBLIGED and n.behaviour in forbidden:
            log.debug("scene %s: obligation %s suppressed by prohibition", scene.scene_id, n.name)
            continue
        if norm_violated(n, active_behaviour, plan, sense):
            bucket = prohibitions if n.operator is Deontic.NOT_PERMITTED else obligations
            bucket.append(_report(n, active_behaviour, tick, scene.scene_id))
    return prohibitions + obligations


def evaluate_role_norms(
    role: RoleSpec, sense: SenseFn, active_behaviour: str | None, plan: Plan, tick: int = 0
) -> list[ViolationReport]:
    """Check a role's standing rules. Monitoring only: role rules are never enforced."""
    return [
        _report(n, active_behaviour, tick, None)
        for n in role.rules
        if all_true(n.condition, sense) and norm_violated(n, active_behaviour, plan, sense)
    ]


# ---------------------------------------------------------------------------
# enforcement


def enforce(violation: ViolationReport, plan: Plan, scene: SceneInstance | None = None) -> Plan:
    """One repair step for ``violation``; returns the new plan (input untouched).

    Raises :class:`DriveNotFoundError` when the behaviour is not in the plan and
    :class:`InvariantFloorError` when a prohibition would empty the drive list.
    PERMITTED reports (which evaluation never produces) leave the plan as is.
    """
    if violation.operator is Deontic.PERMITTED:
        return plan
    idx = find_drive_by_behaviour(plan, violation.expected)
    if violation.operator is Deontic.OBLIGED:
        if idx == 0:
            return plan
        new_plan = move_drive(plan, idx, idx - 1)
    else:
        new_plan, removed = remove_drive(plan, idx)
        if scene is not None:
            scene.archived.append(removed)
    if scene is not None and scene.original_plan_order is None:
        scene.original_plan_order = plan.drives
    return new_plan


@dataclass(frozen=True)
class ComplianceResult:
    plan: Plan
    log: tuple[EnforcementRecord, ...]
    compliant: bool
    mutations: int
    active_behaviour: str | None


def compliance_loop(
    plan: Plan,
    scene: SceneInstance,
    sense: SenseFn,
    active_behaviour: str | None,
    *,
    tick: int = 0,
    agent_id: str = "",
    max_iterations: int | None = None,
) -> ComplianceResult:
    """Enforce, re-select, re-check until the scene's norms hold or the budget runs out.

    The budget defaults to the number of drives on entry, so the loop makes at
    most that many plan mutations.
    """
    limit = len(plan.drives) if max_iterations is None else max_iterations
    records: list[EnforcementRecord] = []
    mutations = 0
    violations = evaluate_norms(scene, sense, active_behaviour, plan, tick)

    def record(norm: str, action: str) -> None:
        records.append(EnforcementRecord(tick, agent_id, scene.scene_id, norm, action, tuple(plan.drive_order())))

    while violations:
        v = violations[0]
        if mutations >= limit:
            record(v.norm, "unenforceable")
            break
        try:
            new_plan = enforce(v, plan, scene)
        except (DriveNotFoundError, InvariantFloorError) as exc:
            log.info("scene %s: norm %s unenforceable: %s", scene.scene_id, v.norm, exc)
            record(v.norm, "unenforceable")
            break
        if new_plan == plan:
            record(v.norm, "unenforceable")
            break
        plan = new_plan
        mutations += 1
        record(v.norm, "moveUp" if v.operator is Deontic.OBLIGED else "remove")
        idx = select_drive(plan.drive_collection, sense)
        active_behaviour = None if idx is None else plan.drives[idx].behaviour
        violations = evaluate_norms(scene, sense, active_behaviour, plan, tick)

    return ComplianceResult(plan, tuple(records), not violations, mutations, active_behaviour)


def restore_after(scene: SceneInstance, plan: Plan, others_changed: bool, baseline: tuple[Drive, ...] | None) -> Plan:
    """Plan after ``scene`` terminates.

    With no other scene still holding changes the drive list returns to
    ``baseline``; otherwise only this scene's parked drives are put back at
    their original positions.
    """
    if not others_changed and baseline is not None:
        new_plan = plan.with_drives(baseline)
    else:
        drives = list(plan.drives)
        names = {d.name for d in drives}
        original = [d.name for d in scene.original_plan_order or ()]

        def slot(d: Drive) -> int:
            return original.index(d.name) if d.name in original else len(original)

        # ascending original index, so earlier inserts don't shift later targets
        for d in sorted(scene.archived, key=slot):
            if d.name in names:
                continue
            drives.insert(min(slot(d), len(drives)), d)
            names.add(d.name)
        new_plan = plan.with_drives(drives)
    scene.original_plan_order = None
    scene.archived = []
    return new_plan


class OperaAgent:
    """One agent's private norm monitor.

    Call :meth:`after_tick` once per planner tick, before the world advances,
    so senses see the same snapshot the planner saw. With ``enabled=False`` the
    monitor still tracks scenes and logs what it would have done
    (``wouldEnforce``) but never touches the plan.
    """

    def __init__(self, agent_id: str, role_id: str, organisation: Organisation, *, enabled: bool = True, library=None):
        if role_id not in organisation.roles:
            raise OrganisationSchemaError(f"unknown role {role_id!r}")
        self.agent_id = agent_id
        self.role = organisation.roles[role_id]
        self.enabled = enabled
        self.library = library
        self.scenes = [SceneInstance(s) for s in organisation.scenes_for(role_id)]
        self.baseline: tuple[Drive, ...] | None = None
        self.log: list[EnforcementRecord] = []
        self.events: list[SceneEvent] = []

    def active_scenes(self) -> list[SceneInstance]:
        return [s for s in self.scenes if s.active]

    def after_tick(self, mind: AgentMind, prims, result: TickResult, tick: int) -> list[SceneEvent]:
        sense = prims.sense
        plan = mind.plan
        events = update_scenes(self.scenes, sense, tick)
        self.events.extend(events)
        by_id = {s.scene_id: s for s in self.scenes}

        for ev in events:
            if ev.kind == "terminated":
                plan = self._terminate(by_id[ev.scene_id], plan, tick)

        just_started = {ev.scene_id for ev in events if ev.kind == "activated"}
        active_behaviour = behaviour_of(plan, result.active_drive)
        for scene in self.scenes:
            if not scene.active or not (result.completed or scene.scene_id in just_started):
                continue
            if self.enabled:
                before = plan.drives
                outcome = compliance_loop(plan, scene, sense, active_behaviour, tick=tick, agent_id=self.agent_id)
                if outcome.mutations and self.baseline is None:
                    self.baseline = before
                self.log.extend(outcome.log)
                plan, active_behaviour = outcome.plan, outcome.active_behaviour
            else:
                scratch = replace(scene, archived=list(scene.archived))
                outcome = compliance_loop(plan, scratch, sense, active_behaviour, tick=tick, agent_id=self.agent_id)
                self.log.extend(
                    EnforcementRecord(r.tick, r.agent_id, r.scene_id, r.norm, "wouldEnforce", r.plan_order_after, r.action)
                    for r in outcome.log
                )

        if plan is not mind.plan:
            swap_plan(mind, plan, self.library)
        return events

    def _terminate(self, scene: SceneInstance, plan: Plan, tick: int) -> Plan:
        if scene.original_plan_order is None:
            return plan
        others = any(s is not scene and s.original_plan_order is not None for s in self.scenes)
        archived = list(scene.archived)
        baseline = self.baseline
        new_plan = restore_after(scene, plan, others, baseline)
        if not others:
            self.baseline = None
        order = tuple(new_plan.drive_order())
        for d in archived:
            self.log.append(EnforcementRecord(tick, self.agent_id, scene.scene_id, d.name, "reinsert", order))
        if not archived and new_plan != plan:
            self.log.append(EnforcementRecord(tick, self.agent_id, scene.scene_id, "-", "restore", order))
        return new_plan
