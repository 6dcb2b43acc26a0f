"""Shared catalog of sense and action primitives.

One catalog serves every agent. Primitives are plain callables taking
``(world, agent_id)``; an :class:`AgentBinding` pins the agent so the planner and
the norm module can ask "what does *this* agent sense" without knowing how the
world is stored.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, fields
from typing import Any, Callable

from awkward_agents.plan import ActionRef, SenseRef

SenseFn = Callable[[Any, str], bool]
ActionFn = Callable[[Any, str], "ActionStatus | bool"]


class LibraryError(Exception):
    pass


class DuplicateRegistration(LibraryError):
    pass


class RegistrationClosed(LibraryError):
    pass


class UnknownSense(LibraryError, KeyError):
    pass


class UnknownAction(LibraryError, KeyError):
    pass


class PrimitiveFault(LibraryError):
    """A sense or action implementation raised instead of answering."""

    def __init__(self, name: str, agent_id: str, cause: BaseException | None = None):
        self.name = name
        self.agent_id = agent_id
        self.cause = cause
        super().__init__(f"primitive {name!r} faulted for agent {agent_id!r}: {cause!r}")


class ActionStatus(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"

    @classmethod
    def of(cls, value: ActionStatus | bool | None) -> ActionStatus:
        if isinstance(value, ActionStatus):
            return value
        return cls.SUCCESS if value else cls.FAILURE


class PrimitiveCatalog:
    """Name -> implementation tables for senses and actions.

    Registration is open until the first dispatch; after that the catalog is
    read-only and safe to share between agents and threads.
    """

    def __init__(self) -> None:
        self._senses: dict[str, SenseFn] = {}
        self._actions: dict[str, ActionFn] = {}
        self._closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def close(self) -> None:
        self._closed = True

    def _check_open(self, name: str) -> None:
        if self._closed:
            raise RegistrationClosed(f"cannot register {name!r}: catalog already in use")

    def register_sense(self, name: str, fn: SenseFn) -> None:
        self._check_open(name)
        if name in self._senses:
            raise DuplicateRegistration(f"sense {name!r} already registered")
        self._senses[name] = fn

    def register_action(self, name: str, fn: ActionFn) -> None:
        self._check_open(name)
        if name in self._actions:
            raise DuplicateRegistration(f"action {name!r} already registered")
        self._actions[name] = fn

    def sense(self, name: str) -> Callable[[SenseFn], SenseFn]:
        """Decorator form of :meth:`register_sense`."""

        def deco(fn: SenseFn) -> SenseFn:
            self.register_sense(name, fn)
            return fn

        return deco

    def action(self, name: str) -> Callable[[ActionFn], ActionFn]:
        def deco(fn: ActionFn) -> ActionFn:
            self.register_action(name, fn)
            return fn

        return deco

    def has_sense(self, name: str) -> bool:
        return name in self._senses

    def has_action(self, name: str) -> bool:
        return name in self._actions

    @property
    def sense_names(self) -> list[str]:
        return sorted(self._senses)

    @property
    def action_names(self) -> list[str]:
        return sorted(self._actions)

    def eval_sense(self, binding: AgentBinding, ref: SenseRef) -> bool:
        self._closed = True
        try:
            fn = self._senses[ref.name]
        except KeyError:
            raise UnknownSense(ref.name) from None
        try:
            value = bool(fn(binding.world, binding.agent_id))
        except PrimitiveFault:
            raise
        except Exception as exc:
            raise PrimitiveFault(ref.name, binding.agent_id, exc) from exc
        return value != ref.negate

    def exec_action(self, binding: AgentBinding, ref: ActionRef) -> ActionStatus:
        self._closed = True
        try:
            fn = self._actions[ref.name]
        except KeyError:
            raise UnknownAction(ref.name) from None
        try:
            return ActionStatus.of(fn(binding.world, binding.agent_id))
        except PrimitiveFault:
            raise
        except Exception as exc:
            raise PrimitiveFault(ref.name, binding.agent_id, exc) from exc


@dataclass
class AgentBinding:
    """An agent's view through the shared catalog.

    Implements the evaluator protocol the planner and norm module consume:
    ``sense(ref) -> bool`` and ``act(ref) -> ActionStatus``.
    """

    catalog: PrimitiveCatalog
    agent_id: str
    world: Any

    def sense(self, ref: SenseRef | str) -> bool:
        if isinstance(ref, str):
            ref = SenseRef(ref)
        return self.catalog.eval_sense(self, ref)

    def act(self, ref: ActionRef | str) -> ActionStatus:
        if isinstance(ref, str):
            ref = ActionRef(ref)
        return self.catalog.exec_action(self, ref)


# ---------------------------------------------------------------------------
# primitive constants


_CAMEL = {
    "low_health_fraction": "lowHealthFraction",
    "farm_time_end_seconds": "farmTimeEndSeconds",
    "attack_range": "attackRange",
    "nearby_radius": "nearbyRadius",
}


@dataclass(frozen=True)
class PrimitiveConfig:
    """Every named threshold a primitive reads."""

    low_health_fraction: float = 0.30
    farm_time_end_seconds: float = 600.0
    attack_range: float = 2.0
    nearby_radius: float = 6.0

    def __post_init__(self) -> None:
        if not 0.0 < self.low_health_fraction < 1.0:
            raise ValueError("lowHealthFraction must lie in (0, 1)")
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{_CAMEL[f.name]} must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> PrimitiveConfig:
        lookup = {v: k for k, v in _CAMEL.items()}
        unknown = set(doc) - set(lookup)
        if unknown:
            raise ValueError(f"unknown primitive constants: {sorted(unknown)}")
        return cls(**{lookup[k]: float(v) for k, v in doc.items()})

    @classmethod
    def from_json(cls, text: str) -> PrimitiveConfig:
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {_CAMEL[k]: v for k, v in asdict(self).items()}
