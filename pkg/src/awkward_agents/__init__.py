"""Reactive drive-collection planning with a role/norm layer, plus a toy lane arena."""

from awkward_agents.behaviour_library import ActionStatus, AgentBinding, PrimitiveCatalog, PrimitiveConfig
from awkward_agents.opera import OperaAgent, load_organisation
from awkward_agents.plan import Plan, load_plan, parse_plan, serialize_plan, validate_plan
from awkward_agents.planner import AgentMind, swap_plan, tick

__all__ = [
    "ActionStatus",
    "AgentBinding",
    "AgentMind",
    "OperaAgent",
    "Plan",
    "PrimitiveCatalog",
    "PrimitiveConfig",
    "load_organisation",
    "load_plan",
    "parse_plan",
    "serialize_plan",
    "swap_plan",
    "tick",
    "validate_plan",
]
