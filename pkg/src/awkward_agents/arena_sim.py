"""Deterministic one-lane farming arena.

A 1-D lane runs from the fountain (``fountainPosition``) to ``laneLength``.
Creep waves spawn at the lane midpoint on a fixed period and lose health to
ambient attrition (standing in for the allied creep line), which opens
last-hit windows. Heroes move along the lane, last-hit creeps for gold, take
chip damage from creeps in range, heal, and regenerate at the fountain.

Agents never mutate the world directly. Actions push commands into the
agent's buffer; :func:`world_step` applies every buffer in the fixed hero order
and then advances the environment by one tick. Everything random comes from
one seeded :class:`random.Random` stream owned by the world.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable

from awkward_agents.behaviour_library import ActionStatus, PrimitiveCatalog, PrimitiveConfig

EPS = 1e-9

GOLD_KINDS = ("startingGold", "lastHit", "purchase")


@dataclass(frozen=True)
class SimConfig:
    duration_seconds: float = 600.0
    tick_seconds: float = 0.5
    lane_length: float = 100.0
    fountain_position: float = 0.0
    fountain_radius: float = 1.0
    fountain_regen_per_second: float = 40.0
    lane_anchor: float = 49.5
    wave_period_seconds: float = 30.0
    first_wave_seconds: float = 0.0
    wave_size: int = 4
    creep_spacing: float = 0.5
    creep_max_health: float = 550.0
    attrition_min_per_second: float = 16.0
    attrition_max_per_second: float = 26.0
    creep_attack_range: float = 2.5
    creep_damage_per_second: float = 0.5
    bounty: int = 40
    starting_gold: int = 300
    hero_max_health: float = 500.0
    hero_attack_damage: float = 50.0
    hero_move_speed: float = 5.0
    healing_item_cost: int = 100
    healing_item_amount: float = 200.0
    heal_ability_amount: float = 200.0
    heal_ability_cooldown_seconds: float = 45.0
    gold_sample_seconds: float = 5.0
    seed: int = 1
    primitives: PrimitiveConfig = field(default_factory=PrimitiveConfig)

    def __post_init__(self) -> None:
        non_negative = {"fountain_position", "first_wave_seconds", "seed", "starting_gold", "creep_spacing"}
        for f in fields(self):
            if f.name == "primitives":
                continue
            value = getattr(self, f.name)
            if f.name in non_negative:
                if value < 0:
                    raise ValueError(f"{_camel(f.name)} must be non-negative")
            elif value <= 0:
                raise ValueError(f"{_camel(f.name)} must be positive")
        steps = self.duration_seconds / self.tick_seconds
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("durationSeconds must be a whole number of ticks")
        if self.attrition_min_per_second > self.attrition_max_per_second:
            raise ValueError("attrition range is inverted")
        if not self.fountain_position <= self.lane_anchor <= self.lane_length:
            raise ValueError("laneAnchor must lie on the lane")

    @property
    def total_steps(self) -> int:
        return round(self.duration_seconds / self.tick_seconds)

    @property
    def midpoint(self) -> float:
        return self.lane_length / 2.0

    def to_dict(self) -> dict:
        out = {_camel(k): v for k, v in asdict(self).items() if k != "primitives"}
        out["primitives"] = self.primitives.to_dict()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> SimConfig:
        known = {_camel(f.name): f for f in fields(cls)}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown simulation constants: {sorted(unknown)}")
        kwargs = {}
        for key, value in doc.items():
            f = known[key]
            if f.name == "primitives":
                kwargs["primitives"] = PrimitiveConfig.from_dict(value)
            elif f.type in ("int",):
                kwargs[f.name] = int(value)
            else:
                kwargs[f.name] = float(value)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> SimConfig:
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(p.title() for p in rest)


@dataclass
class HeroState:
    hero_id: str
    role_id: str
    position: float
    health: float
    max_health: float
    attack_damage: float
    gold: int
    lane_anchor: float
    heal_ability: bool = False
    heal_cooldown: float = 0.0
    inventory: int = 0
    selected_target: int | None = None
    damage_last_step: float = 0.0
    bot_mode: str = "farm"  # scripted-bot memory only

    @property
    def position_number(self) -> int:
        digits = "".join(ch for ch in self.role_id if ch.isdigit())
        return int(digits) if digits else 99


@dataclass
class CreepState:
    creep_id: int
    position: float
    health: float
    max_health: float
    bounty: int
    alive: bool = True


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    hero_id: str | None = None
    creep_id: int | None = None
    delta: float | None = None

    def to_dict(self) -> dict:
        out: dict = {"t": self.t, "kind": self.kind}
        if self.hero_id is not None:
            out["heroId"] = self.hero_id
        if self.creep_id is not None:
            out["creepId"] = self.creep_id
        if self.delta is not None:
            out["delta"] = self.delta
        return out


@dataclass
class WorldState:
    config: SimConfig
    rng: random.Random
    heroes: dict[str, HeroState]
    creeps: list[CreepState] = field(default_factory=list)
    buffers: dict[str, list[tuple]] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    step_index: int = 0
    next_creep_id: int = 0
    next_wave_time: float = 0.0

    @property
    def clock(self) -> float:
        return self.step_index * self.config.tick_seconds

    @property
    def finished(self) -> bool:
        return self.step_index >= self.config.total_steps

    def hero(self, hero_id: str) -> HeroState:
        return self.heroes[hero_id]

    def alive_creeps(self) -> list[CreepState]:
        return [c for c in self.creeps if c.alive]

    def creep(self, creep_id: int | None) -> CreepState | None:
        if creep_id is None:
            return None
        for c in self.creeps:
            if c.creep_id == creep_id:
                return c
        return None

    def push(self, hero_id: str, command: tuple) -> None:
        self.buffers.setdefault(hero_id, []).append(command)

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)


@dataclass(frozen=True)
class HeroSpec:
    hero_id: str
    role_id: str
    heal_ability: bool = False


DEFAULT_HEROES = (HeroSpec("p1", "position1"), HeroSpec("p5", "position5", heal_ability=True))


def create_world(config: SimConfig, heroes: Iterable[HeroSpec] = DEFAULT_HEROES, seed: int | None = None) -> WorldState:
    """Fresh world at clock 0; heroes start at the fountain with full health.

    The iteration order of ``heroes`` is the fixed order commands are applied in.
    """
    seed = config.seed if seed is None else seed
    world = WorldState(config=config, rng=random.Random(seed), heroes={}, next_wave_time=config.first_wave_seconds)
    for spec in heroes:
        world.heroes[spec.hero_id] = HeroState(
            hero_id=spec.hero_id,
            role_id=spec.role_id,
            position=config.fountain_position,
            health=config.hero_max_health,
            max_health=config.hero_max_health,
            attack_damage=config.hero_attack_damage,
            gold=config.starting_gold,
            lane_anchor=config.lane_anchor,
            heal_ability=spec.heal_ability,
        )
        world.events.append(Event(0.0, "startingGold", hero_id=spec.hero_id, delta=config.starting_gold))
    return world


# ---------------------------------------------------------------------------
# dynamics


def _approach(pos: float, dest: float, max_step: float) -> float:
    gap = dest - pos
    if abs(gap) <= max_step:
        return dest
    return pos + max_step if gap > 0 else pos - max_step


def _heal(hero: HeroState, amount: float) -> None:
    hero.health = min(hero.max_health, hero.health + amount)


def at_fountain(world: WorldState, hero: HeroState) -> bool:
    return abs(hero.position - world.config.fountain_position) <= world.config.fountain_radius + EPS


def spawn_wave(world: WorldState) -> list[CreepState]:
    cfg = world.config
    wave = []
    for i in range(cfg.wave_size):
        pos = min(cfg.lane_length, cfg.midpoint + i * cfg.creep_spacing)
        creep = CreepState(world.next_creep_id, pos, cfg.creep_max_health, cfg.creep_max_health, cfg.bounty)
        world.next_creep_id += 1
        wave.append(creep)
    world.creeps.extend(wave)
    world.events.append(Event(world.clock, "spawn", delta=float(len(wave))))
    return wave


def world_step(world: WorldState) -> WorldState:
    """Apply buffered commands, run environment dynamics, advance one tick.

    Commands are applied hero by hero in the world's fixed hero order. Attacks
    are collected and resolved afterwards: when several heroes strike the same
    creep in one tick, the order among them is drawn from the world's RNG, and
    the hero whose hit takes the creep to zero collects the bounty.
    """
    if world.finished:
        return world
    cfg = world.config
    dt = cfg.tick_seconds
    t = world.clock

    for hero in world.heroes.values():
        hero.damage_last_step = 0.0

    attacks: dict[int, list[str]] = {}
    for hero_id, hero in world.heroes.items():
        for cmd in world.buffers.get(hero_id, ()):
            kind = cmd[0]
            if kind == "select":
                hero.selected_target = cmd[1]
            elif kind == "attack":
                attacks.setdefault(cmd[1], []).append(hero_id)
            elif kind == "move":
                dest = min(max(cmd[1], cfg.fountain_position), cfg.lane_length)
                hero.position = _approach(hero.position, dest, cfg.hero_move_speed * dt)
            elif kind == "healAbility":
                if hero.heal_ability and hero.heal_cooldown <= EPS:
                    _heal(hero, cfg.heal_ability_amount)
                    hero.heal_cooldown = cfg.heal_ability_cooldown_seconds
                    world.events.append(Event(t, "heal", hero_id=hero_id, delta=cfg.heal_ability_amount))
            elif kind == "useItem":
                if hero.inventory > 0:
                    hero.inventory -= 1
                    _heal(hero, cfg.healing_item_amount)
                    world.events.append(Event(t, "itemUsed", hero_id=hero_id, delta=cfg.healing_item_amount))
            elif kind == "buy":
                if hero.gold >= cfg.healing_item_cost:
                    hero.gold -= cfg.healing_item_cost
                    hero.inventory += 1
                    world.events.append(Event(t, "purchase", hero_id=hero_id, delta=-cfg.healing_item_cost))
            else:
                raise ValueError(f"unknown command {cmd!r}")
    world.buffers.clear()

    for creep_id in sorted(attacks):
        creep = world.creep(creep_id)
        attackers = attacks[creep_id]
        if len(attackers) > 1:
            world.rng.shuffle(attackers)
        for hero_id in attackers:
            if creep is None or not creep.alive:
                break
            hero = world.heroes[hero_id]
            creep.health -= hero.attack_damage
            if creep.health <= EPS:
                creep.health = 0.0
                creep.alive = False
                hero.gold += creep.bounty
                world.events.append(Event(t, "lastHit", hero_id=hero_id, creep_id=creep_id, delta=creep.bounty))

    while world.next_wave_time <= t + EPS:
        spawn_wave(world)
        world.next_wave_time += cfg.wave_period_seconds

    for creep in world.creeps:
        if not creep.alive:
            continue
        creep.health -= world.rng.uniform(cfg.attrition_min_per_second, cfg.attrition_max_per_second) * dt
        if creep.health <= EPS:
            creep.health = 0.0
            creep.alive = False
            world.events.append(Event(t, "creepExpired", creep_id=creep.creep_id))

    heroes = list(world.heroes.values())
    for creep in world.creeps:
        if not creep.alive:
            continue
        in_range = [h for h in heroes if abs(h.position - creep.position) <= cfg.creep_attack_range + EPS]
        if not in_range:
            continue
        nearest = min(abs(h.position - creep.position) for h in in_range)
        candidates = [h for h in in_range if abs(h.position - creep.position) <= nearest + EPS]
        target = candidates[0] if len(candidates) == 1 else world.rng.choice(candidates)
        hit = min(target.health, cfg.creep_damage_per_second * dt)
        target.health -= hit
        target.damage_last_step += hit

    for hero in heroes:
        if hero.health <= EPS:
            hero.health = hero.max_health
            hero.position = cfg.fountain_position
            hero.selected_target = None
            world.events.append(Event(t, "heroDied", hero_id=hero.hero_id))
        if at_fountain(world, hero):
            _heal(hero, cfg.fountain_regen_per_second * dt)
        hero.heal_cooldown = max(0.0, hero.heal_cooldown - dt)
        target = world.creep(hero.selected_target)
        if target is not None and not target.alive:
            hero.selected_target = None

    world.creeps = [c for c in world.creeps if c.alive]
    world.step_index += 1
    return world


# ---------------------------------------------------------------------------
# geometry helpers shared by primitives and the scripted bot


def nearest_creep(world: WorldState, hero: HeroState) -> CreepState | None:
    alive = world.alive_creeps()
    if not alive:
        return None
    return min(alive, key=lambda c: (abs(c.position - hero.position), c.creep_id))


def last_hittable(world: WorldState, hero: HeroState, attack_range: float) -> list[CreepState]:
    found = [
        c
        for c in world.alive_creeps()
        if c.health < hero.attack_damage and abs(c.position - hero.position) <= attack_range + EPS
    ]
    return sorted(found, key=lambda c: (c.health, c.creep_id))


def _wave_standoff(hero: HeroState, creep: CreepState, attack_range: float) -> float:
    side = -1.0 if hero.position <= creep.position else 1.0
    return creep.position + side * 0.25 * attack_range


def partners(world: WorldState, hero: HeroState, radius: float) -> list[HeroState]:
    return [
        h for h in world.heroes.values() if h.hero_id != hero.hero_id and abs(h.position - hero.position) <= radius + EPS
    ]


# ---------------------------------------------------------------------------
# behaviour-library bindings


def register_arena_primitives(catalog: PrimitiveCatalog, prims: PrimitiveConfig) -> PrimitiveCatalog:
    """Register every sense and action the shipped plans and scenes reference."""

    def hero(world: WorldState, aid: str) -> HeroState:
        return world.heroes[aid]

    def creeps_nearby(w: WorldState, a: str) -> bool:
        h = hero(w, a)
        return any(abs(c.position - h.position) <= prims.nearby_radius + EPS for c in w.alive_creeps())

    def partner_nearby(w: WorldState, a: str) -> bool:
        return bool(partners(w, hero(w, a), prims.nearby_radius))

    def creep_wave_far(w: WorldState, a: str) -> bool:
        h = hero(w, a)
        c = nearest_creep(w, h)
        return c is not None and abs(c.position - h.position) > prims.attack_range + EPS

    def highest_priority_around(w: WorldState, a: str) -> bool:
        h = hero(w, a)
        return any(p.position_number < h.position_number for p in partners(w, h, prims.nearby_radius))

    senses = {
        "isFarmingTime": lambda w, a: w.clock < prims.farm_time_end_seconds,
        "isSafeToFarm": lambda w, a: True,
        "laningPhaseEnded": lambda w, a: w.clock >= prims.farm_time_end_seconds,
        "creepCanBeLastHit": lambda w, a: bool(last_hittable(w, hero(w, a), prims.attack_range)),
        "creepWaveFar": creep_wave_far,
        "lowHealth": lambda w, a: hero(w, a).health < prims.low_health_fraction * hero(w, a).max_health,
        "fullHealth": lambda w, a: hero(w, a).health >= hero(w, a).max_health,
        "takingDamage": lambda w, a: hero(w, a).damage_last_step > 0,
        "hasHealingAbility": lambda w, a: hero(w, a).heal_ability and hero(w, a).heal_cooldown <= EPS,
        "hasHealingItem": lambda w, a: hero(w, a).inventory > 0,
        "enoughGold": lambda w, a: hero(w, a).gold >= w.config.healing_item_cost,
        "partnerNearby": partner_nearby,
        "creepsNearby": creeps_nearby,
        "partnerNotNearby": lambda w, a: not partner_nearby(w, a),
        "highestPriorityAround": highest_priority_around,
        "enemyCreepAround": creeps_nearby,
    }
    for name, fn in senses.items():
        catalog.register_sense(name, fn)

    def select_target(w: WorldState, a: str) -> ActionStatus:
        found = last_hittable(w, hero(w, a), prims.attack_range)
        if not found:
            return ActionStatus.FAILURE
        w.push(a, ("select", found[0].creep_id))
        return ActionStatus.SUCCESS

    def right_click_attack(w: WorldState, a: str) -> ActionStatus:
        h = hero(w, a)
        target = w.creep(h.selected_target)
        if target is None or not target.alive or abs(target.position - h.position) > prims.attack_range + EPS:
            return ActionStatus.FAILURE
        w.push(a, ("attack", target.creep_id))
        return ActionStatus.SUCCESS

    def go_to_creep_wave(w: WorldState, a: str) -> ActionStatus:
        h = hero(w, a)
        c = nearest_creep(w, h)
        if c is None:
            return ActionStatus.FAILURE
        w.push(a, ("move", _wave_standoff(h, c, prims.attack_range)))
        return ActionStatus.SUCCESS

    def go_to_assigned_lane(w: WorldState, a: str) -> ActionStatus:
        w.push(a, ("move", hero(w, a).lane_anchor))
        return ActionStatus.SUCCESS

    def use_healing_ability(w: WorldState, a: str) -> ActionStatus:
        h = hero(w, a)
        if not (h.heal_ability and h.heal_cooldown <= EPS):
            return ActionStatus.FAILURE
        w.push(a, ("healAbility",))
        return ActionStatus.SUCCESS

    def use_healing_item(w: WorldState, a: str) -> ActionStatus:
        if hero(w, a).inventory <= 0:
            return ActionStatus.FAILURE
        w.push(a, ("useItem",))
        return ActionStatus.SUCCESS

    def buy_healing_item(w: WorldState, a: str) -> ActionStatus:
        if hero(w, a).gold < w.config.healing_item_cost:
            return ActionStatus.FAILURE
        w.push(a, ("buy",))
        return ActionStatus.SUCCESS

    def retreat(w: WorldState, a: str) -> ActionStatus:
        w.push(a, ("move", w.config.fountain_position))
        return ActionStatus.SUCCESS

    actions = {
        "selectTarget": select_target,
        "rightClickAttack": right_click_attack,
        "goToCreepWave": go_to_creep_wave,
        "goToAssignedLane": go_to_assigned_lane,
        "useHealingAbility": use_healing_ability,
        "useHealingItem": use_healing_item,
        "buyHealingItem": buy_healing_item,
        "retreat": retreat,
    }
    for name, fn in actions.items():
        catalog.register_action(name, fn)
    return catalog


def build_catalog(prims: PrimitiveConfig | None = None) -> PrimitiveCatalog:
    return register_arena_primitives(PrimitiveCatalog(), prims or PrimitiveConfig())


# ---------------------------------------------------------------------------
# scripted Position 1 bot


def default_bot_policy(world: WorldState, hero_id: str, prims: PrimitiveConfig | None = None) -> list[tuple]:
    """Greedy scripted farmer; pushes its commands into the world buffer and returns them.

    Farms the nearest creeps (select, then attack on the next tick), walks home
    once below the low-health fraction and only comes back at full health.
    """
    prims = prims or world.config.primitives
    hero = world.heroes[hero_id]
    cmds: list[tuple] = []

    if hero.bot_mode == "retreat":
        if at_fountain(world, hero) and hero.health >= hero.max_health:
            hero.bot_mode = "farm"
        else:
            cmds.append(("move", world.config.fountain_position))
    elif hero.health < prims.low_health_fraction * hero.max_health:
        hero.bot_mode = "retreat"
        cmds.append(("move", world.config.fountain_position))

    if not cmds:
        target = world.creep(hero.selected_target)
        hittable = last_hittable(world, hero, prims.attack_range)
        nearest = nearest_creep(world, hero)
        if target is not None and any(c.creep_id == target.creep_id for c in hittable):
            cmds.append(("attack", target.creep_id))
        elif hittable:
            cmds.append(("select", hittable[0].creep_id))
        elif nearest is not None:
            if abs(nearest.position - hero.position) > prims.attack_range + EPS:
                cmds.append(("move", _wave_standoff(hero, nearest, prims.attack_range)))
        else:
            cmds.append(("move", hero.lane_anchor))

    for cmd in cmds:
        world.push(hero_id, cmd)
    return cmds


# ---------------------------------------------------------------------------
# gold accounting


def gold_series(events: Iterable[Event], hero_id: str, *, until: float, cadence: float = 5.0) -> list[tuple[float, int]]:
    """Hero gold sampled at each gold-changing event time and every ``cadence`` seconds.

    Times are non-decreasing; each point carries the gold after every event
    stamped at or before that time.
    """
    deltas: dict[float, float] = {}
    for e in events:
        if e.hero_id == hero_id and e.kind in GOLD_KINDS:
            deltas[e.t] = deltas.get(e.t, 0.0) + (e.delta or 0.0)
    times = set(deltas)
    n = int(until / cadence + EPS)
    times.update(round(k * cadence, 9) for k in range(n + 1))
    series = []
    gold = 0.0
    for t in sorted(times):
        gold += deltas.get(t, 0.0)
        series.append((t, int(round(gold))))
    return series
