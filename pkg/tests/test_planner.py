import copy
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from awkward_agents.arena_sim import CreepState, SimConfig, build_catalog, create_world
from awkward_agents.behaviour_library import ActionStatus, AgentBinding, PrimitiveFault
from awkward_agents.harness import Assets
from awkward_agents.plan import (
    ActionPattern,
    ActionRef,
    Competence,
    CompetenceElement,
    Drive,
    DriveCollection,
    Plan,
    PlanValidationError,
    SenseRef,
    move_drive,
    parse_plan,
    remove_drive,
)
from awkward_agents.planner import (
    AgentMind,
    DriveState,
    Frame,
    select_drive,
    step_action_pattern,
    step_competence,
    swap_plan,
    tick,
    trace_line,
)
from plan_gen import CountingSense, oracle_select, random_assignment, random_plan


class FakePrims:
    def __init__(self, senses=None, fail=(), raise_on=()):
        self.values = dict(senses or {})
        self.fail = set(fail)
        self.raise_on = set(raise_on)
        self.acted: list[str] = []

    def sense(self, ref):
        if ref.name in self.raise_on:
            raise PrimitiveFault(ref.name, "x", RuntimeError("boom"))
        return self.values.get(ref.name, False) != ref.negate

    def act(self, ref):
        self.acted.append(ref.name)
        return ActionStatus.FAILURE if ref.name in self.fail else ActionStatus.SUCCESS


def S(*names):
    return tuple(SenseRef(n) for n in names)


def two_drive_plan():
    aps = {
        "AP-A": ActionPattern("AP-A", (ActionRef("a1"), ActionRef("a2"), ActionRef("a3"))),
        "AP-B": ActionPattern("AP-B", (ActionRef("b1"), ActionRef("b2"))),
    }
    drives = (Drive("B", "B", S("relB"), "AP-B"), Drive("A", "A", S("relA"), "AP-A"))
    return Plan("two", DriveCollection("dc", drives), {}, aps)


@pytest.fixture
def p5():
    return parse_plan(Assets.packaged().plan_text)


def arena(p5, **hero):
    cfg = SimConfig(first_wave_seconds=500)
    world = create_world(cfg, seed=3)
    h = world.hero("p5")
    for k, v in hero.items():
        setattr(h, k, v)
    binding = AgentBinding(build_catalog(cfg.primitives), "p5", world)
    return world, AgentMind("p5", p5), binding


def test_low_health_under_attack_retreats(p5):
    world, mind, binding = arena(p5, health=100.0, damage_last_step=3.0, position=40.0)
    res = tick(mind, binding)
    assert res.active_drive == "DE-Retreat"
    assert res.emitted_action == "retreat"
    assert world.buffers["p5"] == [("move", 0.0)]


def test_idle_tick(p5):
    mind = AgentMind("p5", p5)
    res = tick(mind, FakePrims())
    assert res.active_drive is None and res.emitted_action is None and not res.completed
    assert mind.tick_count == 1


def test_last_hit_spans_two_ticks(p5):
    world, mind, binding = arena(p5, position=50.0)
    world.creeps.append(CreepState(0, 51.0, 20.0, 550.0, 40))
    first = tick(mind, binding)
    assert first.emitted_action == "selectTarget" and not first.completed
    world.hero("p5").selected_target = 0  # what world_step would apply
    world.buffers.clear()
    second = tick(mind, binding)
    assert second.emitted_action == "rightClickAttack"
    assert second.drive_completed == ("DE-FarmLane", "success")


def test_select_drive_first_true_wins():
    drives = tuple(Drive(f"D{i}", f"D{i}", S(f"r{i}"), "AP") for i in range(3))
    dc = DriveCollection("dc", drives)
    sense = CountingSense({"r0": False, "r1": True, "r2": True})
    assert select_drive(dc, sense) == 1
    assert sense.calls == ["r0", "r1"]
    assert select_drive(dc, CountingSense({"r0": False, "r1": False, "r2": False})) is None


@given(st.randoms(use_true_random=False))
def test_selection_priority_and_locality(rng):
    plan = random_plan(rng)
    assign = random_assignment(rng)
    sense = CountingSense(assign)
    got = select_drive(plan.drive_collection, sense)
    assert got == oracle_select(plan, assign)
    upto = len(plan.drives) if got is None else got + 1
    # never more evaluations than the release conditions of drives up to the winner
    assert len(sense.calls) <= sum(len(d.release) for d in plan.drives[:upto])


def heal_competence(p5):
    return p5.competences["C-Heal"]


@pytest.mark.parametrize(
    "senses,kind,child",
    [
        ({"fullHealth": True, "hasHealingAbility": True}, "goal-met", None),
        ({"hasHealingAbility": True, "hasHealingItem": True}, "descend", "AP-UseHealingAbility"),
        ({}, "descend", "AP-Retreat"),
    ],
)
def test_heal_competence_steps(p5, senses, kind, child):
    frame = Frame("C-Heal", "competence")
    out = step_competence(frame, heal_competence(p5), FakePrims(senses).sense)
    assert (out.kind, out.child) == (kind, child)


def test_dead_end_without_fallback(p5):
    retreat = p5.competences["C-Retreat"]
    out = step_competence(Frame("C-Retreat", "competence"), retreat, FakePrims({"lowHealth": True}).sense)
    assert out.kind == "dead-end"


def test_action_pattern_stepping():
    ap = ActionPattern("lh", (ActionRef("selectTarget"), ActionRef("rightClickAttack")))
    frame = Frame("lh", "action-pattern")
    prims = FakePrims()
    first = step_action_pattern(frame, ap, prims.act)
    assert (first.kind, first.action, frame.cursor) == ("emitted", "selectTarget", 1)
    second = step_action_pattern(frame, ap, prims.act)
    assert (second.kind, second.action) == ("pattern-complete", "rightClickAttack")
    single = ActionPattern("one", (ActionRef("x"),))
    assert step_action_pattern(Frame("one", "action-pattern"), single, prims.act).kind == "pattern-complete"
    with pytest.raises(IndexError):
        step_action_pattern(Frame("one", "action-pattern", 1), single, prims.act)


def test_failed_action_fails_drive():
    plan = two_drive_plan()
    mind = AgentMind("x", plan)
    res = tick(mind, FakePrims({"relA": True}, fail={"a1"}))
    assert res.drive_completed == ("A", "failure")
    assert mind.drive_states["A"].stack == []


def test_resumed_drive_continues():
    plan = two_drive_plan()
    alone = AgentMind("x", plan)
    solo = [tick(alone, FakePrims({"relA": True})).emitted_action for _ in range(2)]

    mind = AgentMind("x", plan)
    seq = [
        tick(mind, FakePrims({"relA": True})),
        tick(mind, FakePrims({"relA": True, "relB": True})),
        tick(mind, FakePrims({"relA": True})),
    ]
    assert [r.active_drive for r in seq] == ["A", "B", "A"]
    assert [seq[0].emitted_action, seq[2].emitted_action] == solo == ["a1", "a2"]
    assert mind.drive_states["B"].status in ("running", "paused")


def test_paused_status_recorded():
    mind = AgentMind("x", two_drive_plan())
    tick(mind, FakePrims({"relA": True}))
    tick(mind, FakePrims({"relB": True}))
    assert mind.drive_states["A"].status == "paused"


def test_completion_resets_state():
    mind = AgentMind("x", two_drive_plan())
    actions = [tick(mind, FakePrims({"relA": True})) for _ in range(4)]
    assert [a.emitted_action for a in actions] == ["a1", "a2", "a3", "a1"]
    assert actions[2].drive_completed == ("A", "success")


def test_nested_goal_pops_to_parent():
    aps = {"AP": ActionPattern("AP", (ActionRef("x"),))}
    comps = {
        "Outer": Competence("Outer", S("done"), (CompetenceElement((), "Inner"),)),
        "Inner": Competence("Inner", S("innerDone"), (CompetenceElement((), "AP"),)),
    }
    plan = Plan("n", DriveCollection("dc", (Drive("D", "D", (), "Outer"),)), comps, aps)
    mind = AgentMind("x", plan)
    mind.drive_states["D"] = DriveState("D", [Frame("Outer", "competence"), Frame("Inner", "competence")])
    res = tick(mind, FakePrims({"innerDone": True}))
    assert res.emitted_action is None and not res.completed
    assert [f.name for f in mind.drive_states["D"].stack] == ["Outer"]
    res = tick(mind, FakePrims({"done": True}))
    assert res.drive_completed == ("D", "success")


def test_fault_leaves_mind_unchanged():
    mind = AgentMind("x", two_drive_plan())
    tick(mind, FakePrims({"relA": True}))
    before = copy.deepcopy(mind)
    with pytest.raises(PrimitiveFault):
        tick(mind, FakePrims({"relA": True}, raise_on={"relB"}))
    assert mind == before


def test_fault_wraps_raising_primitive(p5):
    world, mind, binding = arena(p5)
    del world.heroes["p5"]
    with pytest.raises(PrimitiveFault):
        tick(mind, binding)
    assert mind.tick_count == 0


def test_determinism_over_sense_sequences():
    rng = random.Random(11)
    plan = random_plan(rng)
    seq = [random_assignment(rng) for _ in range(50)]

    def run():
        mind = AgentMind("x", plan)
        return [tick(mind, FakePrims(a)) for a in seq]

    assert run() == run()


def test_swap_identical_keeps_states(p5):
    mind = AgentMind("p5", p5)
    tick(mind, FakePrims({"isFarmingTime": True, "isSafeToFarm": True, "creepWaveFar": True}))
    states = copy.deepcopy(mind.drive_states)
    swap_plan(mind, p5)
    assert mind.drive_states == states


def test_swap_after_removal_archives(p5):
    mind = AgentMind("p5", p5)
    tick(mind, FakePrims({"isFarmingTime": True, "isSafeToFarm": True}))
    tick(mind, FakePrims({"lowHealth": True}))
    smaller, _ = remove_drive(p5, 2)
    swap_plan(mind, smaller)
    assert "DE-FarmLane" in mind.archived_states
    assert "DE-Heal" in mind.drive_states
    swap_plan(mind, p5)
    assert "DE-FarmLane" in mind.drive_states


def test_swap_clears_vanished_last_active(p5):
    mind = AgentMind("p5", p5)
    tick(mind, FakePrims({"isFarmingTime": True, "isSafeToFarm": True}))
    assert mind.last_active_drive == "DE-FarmLane"
    swap_plan(mind, remove_drive(p5, 2)[0])
    assert mind.last_active_drive is None


def test_swap_after_reorder_keeps_all(p5):
    mind = AgentMind("p5", p5)
    for s in ({"lowHealth": True}, {"isFarmingTime": True, "isSafeToFarm": True}):
        tick(mind, FakePrims(s))
    keys = set(mind.drive_states)
    swap_plan(mind, move_drive(p5, 2, 0))
    assert set(mind.drive_states) == keys


def test_swap_rejects_invalid(p5):
    mind = AgentMind("p5", p5)
    bad = p5.with_drives(list(p5.drives) + [Drive("Z", "Z", (), "missing")])
    with pytest.raises(PlanValidationError):
        swap_plan(mind, bad)
    assert mind.plan is p5


def test_trace_line_format():
    mind = AgentMind("p5", two_drive_plan())
    line = trace_line("p5", 0, tick(mind, FakePrims({"relB": True})))
    assert line == "0\tp5\tB\tb1\t-"
    tick(mind, FakePrims({"relB": True}))
    assert trace_line("p5", 2, tick(mind, FakePrims())) == "2\tp5\t-\t-\t-"
