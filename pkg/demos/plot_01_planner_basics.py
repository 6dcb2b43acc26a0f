"""
Stepping a reactive plan by hand
================================

Load the shipped support-hero plan, put the hero in a few hand-made
situations and watch which drive wins and which action comes out.
"""

# %%
# The plan file lists drives in priority order. Retreat beats heal, heal
# beats farming.
from awkward_agents.arena_sim import CreepState, SimConfig, build_catalog, create_world, world_step
from awkward_agents.behaviour_library import AgentBinding
from awkward_agents.harness import Assets
from awkward_agents.plan import parse_plan
from awkward_agents.planner import AgentMind, tick, trace_line

plan = parse_plan(Assets.packaged().plan_text)
print(plan.drive_order())

# %%
# A quiet lane: no waves, the carry parked far away. One creep sits next to
# the support with barely any health left.
config = SimConfig(first_wave_seconds=10_000)
world = create_world(config, seed=1)
world.hero("p1").position = 90.0
world.hero("p5").position = 50.0
world.creeps.append(CreepState(0, 51.0, 30.0, 550.0, 40))

binding = AgentBinding(build_catalog(config.primitives), "p5", world)
mind = AgentMind("p5", plan)

# %%
# The last hit takes two ticks: pick the target, then swing.
for step in range(3):
    result = tick(mind, binding)
    print(trace_line("p5", step, result))
    world_step(world)
print("gold:", world.hero("p5").gold)

# %%
# Drop the hero to a fifth of its health. With nothing hurting it the heal
# drive runs and reaches for the innate ability first.
world.hero("p5").health = 100.0
print(trace_line("p5", 3, tick(mind, binding)))
