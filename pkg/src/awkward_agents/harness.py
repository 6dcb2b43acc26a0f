"""Gold-divergence experiment: seeded trials with the norm layer on or off.

One trial pits the scripted Position 1 bot against a Position 5 agent that runs
the reactive planner plus its own norm monitor. With the monitor enabled,
scene violations re-order the Position 5 plan; disabled, the monitor only logs
``wouldEnforce`` entries. Each hero's gold curve gets a least-squares trend and
the per-arm mean slopes decide whether the two heroes' incomes diverge.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from awkward_agents.arena_sim import (
    DEFAULT_HEROES,
    Event,
    SimConfig,
    build_catalog,
    create_world,
    default_bot_policy,
    gold_series,
    world_step,
)
from awkward_agents.behaviour_library import AgentBinding
from awkward_agents.opera import EnforcementRecord, OperaAgent, Organisation, SceneEvent, load_organisation
from awkward_agents.plan import Plan, load_plan
from awkward_agents.planner import AgentMind, tick, trace_line

PLANNER_HERO = "p5"
BOT_HERO = "p1"
HERO_ROLES = {spec.hero_id: spec.role_id for spec in DEFAULT_HEROES}
FARM_BEHAVIOUR = "DE-FarmLane"

# acceptance thresholds for the divergence verdict
ON_RATIO_MIN = 1.4
OFF_GAP_MAX = 0.25
ORDERING_MIN_FRACTION = 0.8


class DegenerateInput(ValueError):
    pass


def linear_regression(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least-squares line ``gold = slope * t + intercept``."""
    if len(points) < 2:
        raise DegenerateInput("need at least two points")
    xy = np.asarray(points, dtype=float)
    t, y = xy[:, 0], xy[:, 1]
    dt = t - t.mean()
    sxx = float(dt @ dt)
    if sxx == 0.0 or len(np.unique(t)) < 2:
        raise DegenerateInput("need at least two distinct times")
    slope = float(dt @ (y - y.mean())) / sxx
    return slope, float(y.mean() - slope * t.mean())


# ---------------------------------------------------------------------------
# inputs


@dataclass(frozen=True)
class Assets:
    plan_text: str
    role_text: str
    scene_text: str
    norm_text: str | None = None

    @classmethod
    def packaged(cls) -> Assets:
        data = resources.files("awkward_agents") / "data"
        return cls(
            (data / "position5.plan.json").read_text(encoding="utf-8"),
            (data / "roles.json").read_text(encoding="utf-8"),
            (data / "scenes.json").read_text(encoding="utf-8"),
            (data / "norms.json").read_text(encoding="utf-8"),
        )

    @classmethod
    def from_dirs(cls, plans_dir: str | Path | None = None, org_dir: str | Path | None = None) -> Assets:
        base = cls.packaged()
        plan_text = base.plan_text
        if plans_dir is not None:
            plan_text = _plan_file(Path(plans_dir)).read_text(encoding="utf-8")
        role_text, scene_text, norm_text = base.role_text, base.scene_text, base.norm_text
        if org_dir is not None:
            org = Path(org_dir)
            role_text = (org / "roles.json").read_text(encoding="utf-8")
            scene_text = (org / "scenes.json").read_text(encoding="utf-8")
            norms = org / "norms.json"
            norm_text = norms.read_text(encoding="utf-8") if norms.exists() else None
        return cls(plan_text, role_text, scene_text, norm_text)


def _plan_file(plans_dir: Path) -> Path:
    preferred = plans_dir / "position5.plan.json"
    if preferred.exists():
        return preferred
    found = sorted(plans_dir.glob("*.plan.json"))
    if len(found) != 1:
        raise FileNotFoundError(f"expected position5.plan.json or exactly one *.plan.json in {plans_dir}")
    return found[0]


def default_config() -> SimConfig:
    data = resources.files("awkward_agents") / "data"
    return SimConfig.from_json((data / "sim_config.json").read_text(encoding="utf-8"))


def load_agent_inputs(config: SimConfig, assets: Assets):
    """Catalog, validated plan and organisation for one run; raises on any load error."""
    catalog = build_catalog(config.primitives)
    plan = load_plan(assets.plan_text, catalog)
    org = load_organisation(
        assets.role_text,
        assets.scene_text,
        assets.norm_text,
        library=catalog,
        behaviours=[d.behaviour for d in plan.drives],
    )
    return catalog, plan, org


# ---------------------------------------------------------------------------
# trials


@dataclass(frozen=True)
class TickLog:
    tick: int
    active_drive: str | None
    emitted_action: str | None
    completed: bool
    scene_active: bool  # as seen by the planner at the start of the tick
    higher_priority_around: bool
    activated: bool  # a scene started during this tick's norm check


@dataclass
class TrialRecord:
    seed: int
    opera_enabled: bool
    gold: dict[str, list[tuple[float, int]]]
    enforcement_log: list[EnforcementRecord]
    scene_events: list[SceneEvent]
    events: list[Event]
    ticks: list[TickLog] = field(default_factory=list)
    trace: list[str] = field(default_factory=list)
    runtime_seconds: float = 0.0

    @property
    def arm(self) -> str:
        return "on" if self.opera_enabled else "off"

    def plan_mutations(self) -> list[EnforcementRecord]:
        return [r for r in self.enforcement_log if r.action in ("moveUp", "remove", "reinsert", "restore")]

    def enforcement_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.enforcement_log)


def run_trial(
    config: SimConfig,
    seed: int,
    opera_enabled: bool,
    assets: Assets | None = None,
    *,
    keep_trace: bool = False,
) -> TrialRecord:
    started = time.perf_counter()
    assets = assets or Assets.packaged()
    catalog, plan, org = load_agent_inputs(config, assets)
    world = create_world(config, seed=seed)
    mind = AgentMind(PLANNER_HERO, plan)
    binding = AgentBinding(catalog, PLANNER_HERO, world)
    monitor = OperaAgent(PLANNER_HERO, HERO_ROLES[PLANNER_HERO], org, enabled=opera_enabled, library=catalog)
    ticks: list[TickLog] = []
    trace: list[str] = []

    for step in range(config.total_steps):
        scene_active = bool(monitor.active_scenes())
        hpa = binding.sense("highestPriorityAround")
        result = tick(mind, binding)
        events = monitor.after_tick(mind, binding, result, step)
        ticks.append(
            TickLog(
                step,
                result.active_drive,
                result.emitted_action,
                result.completed,
                scene_active,
                hpa,
                any(e.kind == "activated" for e in events),
            )
        )
        if keep_trace:
            trace.append(trace_line(PLANNER_HERO, step, result))
        default_bot_policy(world, BOT_HERO, config.primitives)
        world_step(world)

    gold = {
        hero_id: gold_series(world.events, hero_id, until=config.duration_seconds, cadence=config.gold_sample_seconds)
        for hero_id in world.heroes
    }
    return TrialRecord(
        seed=seed,
        opera_enabled=opera_enabled,
        gold=gold,
        enforcement_log=list(monitor.log),
        scene_events=list(monitor.events),
        events=list(world.events),
        ticks=ticks,
        trace=trace,
        runtime_seconds=time.perf_counter() - started,
    )


def compliance_breaches(record: TrialRecord, behaviour: str = FARM_BEHAVIOUR) -> list[int]:
    """Ticks where the agent farmed inside a running scene with a higher-priority ally near.

    Farming is tolerated from a scene's activation up to and including the
    first drive-completion boundary after it.
    """
    breaches = []
    grace_until: int | None = None
    waiting_for_boundary = False
    for log in record.ticks:
        if waiting_for_boundary and log.completed:
            grace_until = log.tick
            waiting_for_boundary = False
        if (
            log.scene_active
            and log.higher_priority_around
            and log.active_drive == behaviour
            and not waiting_for_boundary
            and (grace_until is None or log.tick > grace_until)
        ):
            breaches.append(log.tick)
        if log.activated:
            waiting_for_boundary = True
            grace_until = None
    return breaches


# ---------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class TrendSummary:
    hero_id: str
    slope: float
    intercept: float
    samples: int


@dataclass(frozen=True)
class TrendRow:
    seed: int
    arm: str
    trend: TrendSummary


def trends_for(record: TrialRecord) -> list[TrendSummary]:
    out = []
    for hero_id, series in record.gold.items():
        slope, intercept = linear_regression(series)
        out.append(TrendSummary(hero_id, slope, intercept, len(series)))
    return out


@dataclass
class ExperimentSummary:
    seeds: list[int]
    arms: list[str]
    trials: dict[tuple[int, str], TrialRecord]
    rows: list[TrendRow]

    def slope(self, seed: int, arm: str, hero_id: str) -> float:
        for row in self.rows:
            if row.seed == seed and row.arm == arm and row.trend.hero_id == hero_id:
                return row.trend.slope
        raise KeyError((seed, arm, hero_id))

    def mean_slope(self, arm: str, hero_id: str) -> float:
        return float(np.mean([self.slope(s, arm, hero_id) for s in self.seeds]))

    def seeds_with_divergence(self) -> list[int]:
        def gap(seed: int, arm: str) -> float:
            return self.slope(seed, arm, BOT_HERO) - self.slope(seed, arm, PLANNER_HERO)

        return [s for s in self.seeds if gap(s, "on") > gap(s, "off")]

    def verdict(self) -> dict:
        out: dict = {"meanSlopes": {arm: {h: self.mean_slope(arm, h) for h in (BOT_HERO, PLANNER_HERO)} for arm in self.arms}}
        if "on" in self.arms:
            p1, p5 = self.mean_slope("on", BOT_HERO), self.mean_slope("on", PLANNER_HERO)
            out["onRatio"] = p1 / p5 if p5 > 0 else float("inf")
            out["onDiverges"] = p1 >= ON_RATIO_MIN * p5
        if "off" in self.arms:
            p1, p5 = self.mean_slope("off", BOT_HERO), self.mean_slope("off", PLANNER_HERO)
            out["offRelativeGap"] = abs(p1 - p5) / p1 if p1 else float("inf")
            out["offSimilar"] = out["offRelativeGap"] <= OFF_GAP_MAX
        if {"on", "off"} <= set(self.arms):
            diverging = self.seeds_with_divergence()
            out["seedsDiverging"] = diverging
            out["orderingHolds"] = len(diverging) >= ORDERING_MIN_FRACTION * len(self.seeds)
            out["divergence"] = bool(out["onDiverges"] and out["offSimilar"] and out["orderingHolds"])
        return out

    def gold_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "arm", "heroId", "t", "gold"])
        for seed in self.seeds:
            for arm in self.arms:
                for hero_id, series in self.trials[(seed, arm)].gold.items():
                    for t, g in series:
                        w.writerow([seed, arm, hero_id, repr(float(t)), g])
        return buf.getvalue()

    def trends_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "arm", "heroId", "slope", "intercept"])
        for row in self.rows:
            w.writerow([row.seed, row.arm, row.trend.hero_id, repr(row.trend.slope), repr(row.trend.intercept)])
        return buf.getvalue()

    def summary_json(self) -> str:
        doc = {"seeds": self.seeds, "arms": self.arms, **self.verdict()}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "gold_series.csv").write_text(self.gold_csv(), encoding="utf-8")
        (out / "trends.csv").write_text(self.trends_csv(), encoding="utf-8")
        (out / "summary.json").write_text(self.summary_json(), encoding="utf-8")
        for (seed, arm), record in sorted(self.trials.items()):
            (out / f"enforcement_seed{seed}_{arm}.jsonl").write_text(record.enforcement_jsonl(), encoding="utf-8")


def _run_one(args: tuple[SimConfig, int, bool, Assets]) -> TrialRecord:
    config, seed, enabled, assets = args
    return run_trial(config, seed, enabled, assets)


def run_experiment(
    config: SimConfig,
    seeds: Iterable[int],
    arms: Iterable[str] = ("on", "off"),
    assets: Assets | None = None,
    *,
    out_dir: str | Path | None = None,
    workers: int = 1,
) -> ExperimentSummary:
    seeds = list(seeds)
    arms = list(arms)
    if not seeds:
        raise ValueError("need at least one seed")
    bad = [a for a in arms if a not in ("on", "off")]
    if bad or not arms:
        raise ValueError(f"arms must be drawn from 'on'/'off', got {arms}")
    assets = assets or Assets.packaged()
    jobs = [(config, seed, arm == "on", assets) for seed in seeds for arm in arms]

    def context(i: int) -> str:
        return f"seed {jobs[i][1]}, arm {arms[i % len(arms)]}"

    records: list[TrialRecord] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, job) for job in jobs]
            for i, fut in enumerate(futures):
                try:
                    records.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(f"trial failed ({context(i)}): {exc}") from exc
    else:
        for i, job in enumerate(jobs):
            try:
                records.append(_run_one(job))
            except Exception as exc:
                raise RuntimeError(f"trial failed ({context(i)}): {exc}") from exc

    trials = {(r.seed, r.arm): r for r in records}
    rows = [TrendRow(r.seed, r.arm, t) for r in records for t in trends_for(r)]
    summary = ExperimentSummary(seeds, arms, trials, rows)
    if out_dir is not None:
        summary.write(out_dir)
    return summary
