"""Reactive plan model: drive collection, drives, competences, action patterns.

Plans are immutable values. The drive-reordering helpers (``move_drive``,
``remove_drive``, ``insert_drive``) return fresh plans and leave their input
untouched; the agent's plan manager swaps the new value in between ticks.

Plan file layout (JSON)::

    {
      "name": "position5",
      "driveCollection": {"name": "...", "drives": [
          {"name": "DE-Retreat", "behaviour": "DE-Retreat",
           "release": ["takingDamage", "lowHealth"], "root": "C-Retreat"}, ...]},
      "competences": [{"name": "...", "goal": [...],
                       "elements": [{"condition": [...], "child": "..."}]}],
      "actionPatterns": [{"name": "...", "actions": ["selectTarget", ...]}]
    }

Drives and competence elements are listed in priority order (first = highest).
A sense entry is either ``"senseName"`` or ``{"sense": "senseName", "negate": true}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Iterable, Mapping

if TYPE_CHECKING:
    from awkward_agents.behaviour_library import PrimitiveCatalog


class PlanError(ValueError):
    """Base class for every plan loading or editing error."""


class PlanSyntaxError(PlanError):
    pass


class SchemaError(PlanError):
    pass


class PlanReferenceError(PlanError):
    pass


class CycleError(PlanError):
    pass


class DuplicateNameError(PlanError):
    pass


class DriveNotFoundError(PlanError, LookupError):
    pass


class DriveIndexError(PlanError, IndexError):
    pass


class InvariantFloorError(PlanError):
    """Raised when an edit would leave the drive collection empty."""


class PlanValidationError(PlanError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("; ".join(str(issue) for issue in report.issues))


@dataclass(frozen=True)
class SenseRef:
    name: str
    negate: bool = False

    def __str__(self) -> str:
        return f"!{self.name}" if self.negate else self.name


@dataclass(frozen=True)
class ActionRef:
    name: str


@dataclass(frozen=True)
class ActionPattern:
    name: str
    actions: tuple[ActionRef, ...]


@dataclass(frozen=True)
class CompetenceElement:
    condition: tuple[SenseRef, ...]
    child: str


@dataclass(frozen=True)
class Competence:
    name: str
    goal: tuple[SenseRef, ...]
    elements: tuple[CompetenceElement, ...]


@dataclass(frozen=True)
class Drive:
    name: str
    behaviour: str
    release: tuple[SenseRef, ...]
    root: str


@dataclass(frozen=True)
class DriveCollection:
    name: str
    drives: tuple[Drive, ...]


@dataclass(frozen=True)
class Plan:
    name: str
    drive_collection: DriveCollection
    competences: Mapping[str, Competence] = field(default_factory=dict)
    action_patterns: Mapping[str, ActionPattern] = field(default_factory=dict)

    @property
    def drives(self) -> tuple[Drive, ...]:
        return self.drive_collection.drives

    def drive_order(self) -> list[str]:
        return [d.name for d in self.drives]

    def kind_of(self, name: str) -> str | None:
        if name in self.competences:
            return "competence"
        if name in self.action_patterns:
            return "action-pattern"
        return None

    def with_drives(self, drives: Iterable[Drive]) -> Plan:
        return replace(self, drive_collection=replace(self.drive_collection, drives=tuple(drives)))


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Issue:
    kind: str  # "UnknownSense" | "UnknownAction" | "DuplicateName" | "DanglingReference" | "Cycle" | "Schema"
    name: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.issues)

    def kinds(self) -> list[str]:
        return [i.kind for i in self.issues]


def _competence_cycle(competences: Mapping[str, Competence]) -> list[str] | None:
    """Return one cycle (as a name path) in the competence child graph, if any."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {name: WHITE for name in competences}
    path: list[str] = []

    def visit(name: str) -> list[str] | None:
        colour[name] = GREY
        path.append(name)
        for element in competences[name].elements:
            child = element.child
            if child not in competences:
                continue
            if colour[child] == GREY:
                return path[path.index(child):] + [child]
            if colour[child] == WHITE:
                found = visit(child)
                if found:
                    return found
        path.pop()
        colour[name] = BLACK
        return None

    for name in competences:
        if colour[name] == WHITE:
            found = visit(name)
            if found:
                return found
    return None


def structural_issues(plan: Plan) -> list[Issue]:
    issues: list[Issue] = []
    drives = plan.drives
    if not drives:
        issues.append(Issue("Schema", plan.drive_collection.name, "drive collection has no drives"))

    seen: dict[str, str] = {}

    def claim(name: str, what: str) -> None:
        if not name:
            issues.append(Issue("Schema", name, f"{what} with empty name"))
        elif name in seen:
            issues.append(Issue("DuplicateName", name, f"{what} {name!r} clashes with {seen[name]} of the same name"))
        else:
            seen[name] = what

    for d in drives:
        claim(d.name, "drive")
    for key, c in plan.competences.items():
        if key != c.name:
            issues.append(Issue("Schema", key, f"competence keyed {key!r} is named {c.name!r}"))
        claim(c.name, "competence")
    for key, ap in plan.action_patterns.items():
        if key != ap.name:
            issues.append(Issue("Schema", key, f"action pattern keyed {key!r} is named {ap.name!r}"))
        claim(ap.name, "action pattern")

    behaviours: set[str] = set()
    for d in drives:
        if not d.behaviour:
            issues.append(Issue("Schema", d.name, f"drive {d.name!r} has an empty behaviour label"))
        elif d.behaviour in behaviours:
            issues.append(Issue("DuplicateName", d.behaviour, f"behaviour label {d.behaviour!r} used by two drives"))
        behaviours.add(d.behaviour)
        if plan.kind_of(d.root) is None:
            issues.append(Issue("DanglingReference", d.root, f"drive {d.name!r} roots at unknown element {d.root!r}"))

    for c in plan.competences.values():
        if not c.elements:
            issues.append(Issue("Schema", c.name, f"competence {c.name!r} has no elements"))
        for e in c.elements:
            if plan.kind_of(e.child) is None:
                issues.append(
                    Issue("DanglingReference", e.child, f"competence {c.name!r} refers to unknown child {e.child!r}")
                )
    for ap in plan.action_patterns.values():
        if not ap.actions:
            issues.append(Issue("Schema", ap.name, f"action pattern {ap.name!r} has no actions"))

    for ref in _all_sense_refs(plan):
        if not ref.name:
            issues.append(Issue("Schema", "", "empty sense name"))
    for ref in _all_action_refs(plan):
        if not ref.name:
            issues.append(Issue("Schema", "", "empty action name"))

    cycle = _competence_cycle(plan.competences)
    if cycle:
        issues.append(Issue("Cycle", cycle[0], "competence cycle " + " -> ".join(cycle)))
    return issues


def _all_sense_refs(plan: Plan) -> Iterable[SenseRef]:
    for d in plan.drives:
        yield from d.release
    for c in plan.competences.values():
        yield from c.goal
        for e in c.elements:
            yield from e.condition


def _all_action_refs(plan: Plan) -> Iterable[ActionRef]:
    for ap in plan.action_patterns.values():
        yield from ap.actions


def validate_plan(plan: Plan, library: PrimitiveCatalog | None = None) -> ValidationReport:
    """Collect every structural breach and, given a catalog, every unresolved primitive.

    An empty report means the plan can be loaded and ticked.
    """
    issues = structural_issues(plan)
    if library is not None:
        missing_senses = sorted({r.name for r in _all_sense_refs(plan) if r.name and not library.has_sense(r.name)})
        missing_actions = sorted({r.name for r in _all_action_refs(plan) if r.name and not library.has_action(r.name)})
        issues += [Issue("UnknownSense", n, f"sense {n!r} is not in the behaviour library") for n in missing_senses]
        issues += [Issue("UnknownAction", n, f"action {n!r} is not in the behaviour library") for n in missing_actions]
    return ValidationReport(tuple(issues))


# ---------------------------------------------------------------------------
# parsing / serialisation


def _expect(obj: Any, kind: type, where: str) -> Any:
    if not isinstance(obj, kind):
        raise SchemaError(f"{where}: expected {kind.__name__}, got {type(obj).__name__}")
    return obj


def _field(obj: dict, key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    return _expect(obj[key], kind, f"{where}.{key}")


def _name(obj: dict, where: str) -> str:
    name = _field(obj, "name", str, where)
    if not name:
        raise SchemaError(f"{where}: empty name")
    return name


def parse_sense(raw: Any, where: str = "sense") -> SenseRef:
    if isinstance(raw, str):
        if not raw:
            raise SchemaError(f"{where}: empty sense name")
        return SenseRef(raw)
    if isinstance(raw, dict):
        name = _field(raw, "sense", str, where)
        if not name:
            raise SchemaError(f"{where}: empty sense name")
        negate = _expect(raw.get("negate", False), bool, f"{where}.negate")
        return SenseRef(name, negate)
    raise SchemaError(f"{where}: sense entries are strings or {{'sense': ..., 'negate': ...}} objects")


def parse_senses(raw: Any, where: str) -> tuple[SenseRef, ...]:
    return tuple(parse_sense(s, f"{where}[{i}]") for i, s in enumerate(_expect(raw, list, where)))


def dump_sense(ref: SenseRef) -> str | dict:
    return {"sense": ref.name, "negate": True} if ref.negate else ref.name


def _named_table(items: list, kind: str, build) -> dict:
    table: dict = {}
    for i, raw in enumerate(items):
        item = build(_expect(raw, dict, f"{kind}[{i}]"), f"{kind}[{i}]")
        if item.name in table:
            raise DuplicateNameError(f"{kind}: {item.name!r} defined twice")
        table[item.name] = item
    return table


def _build_competence(raw: dict, where: str) -> Competence:
    elements = []
    for i, e in enumerate(_field(raw, "elements", list, where)):
        e = _expect(e, dict, f"{where}.elements[{i}]")
        child = _field(e, "child", str, f"{where}.elements[{i}]")
        elements.append(CompetenceElement(parse_senses(e.get("condition", []), f"{where}.elements[{i}].condition"), child))
    if not elements:
        raise SchemaError(f"{where}: competence needs at least one element")
    return Competence(_name(raw, where), parse_senses(raw.get("goal", []), f"{where}.goal"), tuple(elements))


def _build_action_pattern(raw: dict, where: str) -> ActionPattern:
    actions = []
    for i, a in enumerate(_field(raw, "actions", list, where)):
        a = _expect(a, str, f"{where}.actions[{i}]")
        if not a:
            raise SchemaError(f"{where}.actions[{i}]: empty action name")
        actions.append(ActionRef(a))
    if not actions:
        raise SchemaError(f"{where}: action pattern needs at least one action")
    return ActionPattern(_name(raw, where), tuple(actions))


def _build_drive(raw: dict, where: str) -> Drive:
    name = _name(raw, where)
    behaviour = _expect(raw.get("behaviour", name), str, f"{where}.behaviour") or name
    release = parse_senses(raw.get("release", []), f"{where}.release")
    return Drive(name, behaviour, release, _field(raw, "root", str, where))


def plan_from_dict(doc: Any) -> Plan:
    doc = _expect(doc, dict, "plan")
    dc_raw = _field(doc, "driveCollection", dict, "plan")
    drives_raw = _field(dc_raw, "drives", list, "driveCollection")
    drives = []
    for i, raw in enumerate(drives_raw):
        drives.append(_build_drive(_expect(raw, dict, f"drives[{i}]"), f"drives[{i}]"))
    if not drives:
        raise SchemaError("driveCollection: needs at least one drive")
    dc = DriveCollection(_expect(dc_raw.get("name", "DC"), str, "driveCollection.name"), tuple(drives))
    competences = _named_table(_expect(doc.get("competences", []), list, "competences"), "competences", _build_competence)
    patterns = _named_table(
        _expect(doc.get("actionPatterns", []), list, "actionPatterns"), "actionPatterns", _build_action_pattern
    )
    plan = Plan(_expect(doc.get("name", dc.name), str, "plan.name"), dc, competences, patterns)

    # raise the first structural problem with its specific error type
    issues = structural_issues(plan)
    for kind, exc in (
        ("DuplicateName", DuplicateNameError),
        ("DanglingReference", PlanReferenceError),
        ("Cycle", CycleError),
        ("Schema", SchemaError),
    ):
        for issue in issues:
            if issue.kind == kind:
                raise exc(issue.message)
    return plan


def parse_plan(text: str) -> Plan:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanSyntaxError(f"malformed plan document: {exc}") from exc
    return plan_from_dict(doc)


def load_plan(text: str, library: PrimitiveCatalog) -> Plan:
    """Parse and resolve every primitive against ``library``; raise on any issue."""
    plan = parse_plan(text)
    report = validate_plan(plan, library)
    if report:
        raise PlanValidationError(report)
    return plan


def plan_to_dict(plan: Plan) -> dict:
    return {
        "name": plan.name,
        "driveCollection": {
            "name": plan.drive_collection.name,
            "drives": [
                {
                    "name": d.name,
                    "behaviour": d.behaviour,
                    "release": [dump_sense(s) for s in d.release],
                    "root": d.root,
                }
                for d in plan.drives
            ],
        },
        "competences": [
            {
                "name": c.name,
                "goal": [dump_sense(s) for s in c.goal],
                "elements": [{"condition": [dump_sense(s) for s in e.condition], "child": e.child} for e in c.elements],
            }
            for c in plan.competences.values()
        ],
        "actionPatterns": [{"name": ap.name, "actions": [a.name for a in ap.actions]} for ap in plan.action_patterns.values()],
    }


def serialize_plan(plan: Plan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# drive lookup and list surgery


def find_drive_by_behaviour(plan: Plan, behaviour: str) -> int:
    for i, d in enumerate(plan.drives):
        if d.behaviour == behaviour:
            return i
    raise DriveNotFoundError(f"no drive with behaviour {behaviour!r} in plan {plan.name!r}")


def _check_index(index: int, size: int, what: str) -> None:
    if not 0 <= index < size:
        raise DriveIndexError(f"{what} index {index} out of range for {size} drives")


def move_drive(plan: Plan, src: int, dst: int) -> Plan:
    drives = list(plan.drives)
    _check_index(src, len(drives), "source")
    _check_index(dst, len(drives), "target")
    drive = drives.pop(src)
    drives.insert(dst, drive)
    return plan.with_drives(drives)


def move_drive_to_top(plan: Plan, behaviour: str) -> Plan:
    return move_drive(plan, find_drive_by_behaviour(plan, behaviour), 0)


def remove_drive(plan: Plan, index: int) -> tuple[Plan, Drive]:
    drives = list(plan.drives)
    _check_index(index, len(drives), "removal")
    if len(drives) == 1:
        raise InvariantFloorError(f"cannot remove the last drive of {plan.drive_collection.name!r}")
    removed = drives.pop(index)
    return plan.with_drives(drives), removed


def insert_drive(plan: Plan, drive: Drive, index: int) -> Plan:
    drives = list(plan.drives)
    if not 0 <= index <= len(drives):
        raise DriveIndexError(f"insertion index {index} out of range for {len(drives)} drives")
    names = {d.name for d in drives} | set(plan.competences) | set(plan.action_patterns)
    if drive.name in names:
        raise DuplicateNameError(f"drive {drive.name!r} already present")
    if drive.behaviour in {d.behaviour for d in drives}:
        raise DuplicateNameError(f"behaviour label {drive.behaviour!r} already present")
    drives.insert(index, drive)
    return plan.with_drives(drives)
