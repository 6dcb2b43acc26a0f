import pytest

from awkward_agents.arena_sim import SimConfig, build_catalog, create_world
from awkward_agents.behaviour_library import (
    ActionStatus,
    AgentBinding,
    DuplicateRegistration,
    PrimitiveCatalog,
    PrimitiveConfig,
    PrimitiveFault,
    RegistrationClosed,
    UnknownAction,
    UnknownSense,
)
from awkward_agents.plan import ActionRef, SenseRef


def make_binding(**hero):
    cfg = SimConfig()
    world = create_world(cfg, seed=1)
    for k, v in hero.items():
        setattr(world.hero("p5"), k, v)
    return world, AgentBinding(build_catalog(cfg.primitives), "p5", world)


def test_register_and_dispatch():
    cat = PrimitiveCatalog()
    cat.register_sense("lowHealth", lambda w, a: w[a] < 3)
    b = AgentBinding(cat, "x", {"x": 1})
    assert b.sense("lowHealth") is True
    assert b.sense(SenseRef("lowHealth", negate=True)) is False


def test_duplicate_registration():
    cat = PrimitiveCatalog()
    cat.register_sense("lowHealth", lambda w, a: True)
    with pytest.raises(DuplicateRegistration):
        cat.register_sense("lowHealth", lambda w, a: False)


def test_registration_closes_after_first_dispatch():
    cat = PrimitiveCatalog()

    @cat.sense("s")
    def s(w, a):
        return True

    AgentBinding(cat, "x", None).sense("s")
    with pytest.raises(RegistrationClosed):
        cat.register_action("late", lambda w, a: True)


def test_unknown_names():
    cat = PrimitiveCatalog()
    b = AgentBinding(cat, "x", None)
    with pytest.raises(UnknownSense):
        b.sense("nope")
    with pytest.raises(UnknownAction):
        b.act("nope")


def test_raising_primitive_becomes_fault():
    cat = PrimitiveCatalog()
    cat.register_sense("bad", lambda w, a: 1 / 0)
    with pytest.raises(PrimitiveFault) as info:
        AgentBinding(cat, "p5", None).sense("bad")
    assert info.value.name == "bad" and info.value.agent_id == "p5"


def test_action_status_coercion():
    assert ActionStatus.of(True) is ActionStatus.SUCCESS
    assert ActionStatus.of(None) is ActionStatus.FAILURE


def test_full_health_boundary():
    _, b = make_binding()
    assert b.sense("fullHealth")


def test_always_safe_to_farm():
    world, b = make_binding(health=1.0, position=77.0)
    assert b.sense("isSafeToFarm")


@pytest.mark.parametrize("fraction,expected", [(0.29, True), (0.31, False)])
def test_low_health_threshold(fraction, expected):
    _, b = make_binding(health=fraction * 500.0)
    assert b.sense("lowHealth") is expected


def test_right_click_needs_target():
    _, b = make_binding()
    assert b.act("rightClickAttack") is ActionStatus.FAILURE


def test_right_click_queues_attack():
    from awkward_agents.arena_sim import CreepState

    world, b = make_binding(position=50.0, selected_target=7)
    world.creeps.append(CreepState(7, 51.0, 30.0, 550.0, 40))
    assert b.act(ActionRef("rightClickAttack")) is ActionStatus.SUCCESS
    assert world.buffers["p5"] == [("attack", 7)]


def test_buy_without_gold_fails():
    world, b = make_binding(gold=99)
    assert b.act("buyHealingItem") is ActionStatus.FAILURE
    assert world.hero("p5").gold == 99 and not world.buffers


def test_senses_are_pure():
    world, b = make_binding(position=48.0)
    from awkward_agents.arena_sim import world_step

    world_step(world)
    cat = b.catalog
    before = repr(world)
    first = {n: b.sense(n) for n in cat.sense_names}
    second = {n: b.sense(n) for n in cat.sense_names}
    assert first == second and repr(world) == before


def test_mirrored_agents_get_mirrored_senses():
    cfg = SimConfig()
    world = create_world(cfg, seed=1)
    for h in world.heroes.values():
        h.position, h.health = 30.0, 100.0
    cat = build_catalog()
    a, b = AgentBinding(cat, "p1", world), AgentBinding(cat, "p5", world)
    symmetric = [n for n in cat.sense_names if n not in ("highestPriorityAround", "hasHealingAbility")]
    assert {n: a.sense(n) for n in symmetric} == {n: b.sense(n) for n in symmetric}


def test_primitive_config_json():
    cfg = PrimitiveConfig.from_json('{"lowHealthFraction":0.30, "farmTimeEndSeconds":600, "attackRange":2.0, "nearbyRadius":6.0}')
    assert cfg == PrimitiveConfig()
    assert PrimitiveConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        PrimitiveConfig.from_dict({"lowHealthFraction": 1.5})
    with pytest.raises(ValueError):
        PrimitiveConfig.from_dict({"typo": 1})


def test_packaged_primitive_file_matches_defaults():
    from importlib import resources

    text = (resources.files("awkward_agents") / "data" / "primitives.json").read_text()
    assert PrimitiveConfig.from_json(text) == PrimitiveConfig()
