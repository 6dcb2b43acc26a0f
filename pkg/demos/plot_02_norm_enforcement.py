"""
Watching the norm layer rewrite a plan
======================================

The support hero's monitor tracks the lane-sharing scene. While the carry
stands nearby, farming is forbidden and the farm drive is pulled out of the
plan; when the carry leaves, the drive comes back in its old slot.
"""

# %%
from awkward_agents.arena_sim import build_catalog
from awkward_agents.harness import Assets, load_agent_inputs, default_config
from awkward_agents.opera import OperaAgent
from awkward_agents.planner import AgentMind, TickResult

catalog, plan, org = load_agent_inputs(default_config(), Assets.packaged())
scene = org.scenes[0]
print(scene.scene_id, [str(s) for s in scene.landmarks], "->", [str(s) for s in scene.results])


# %%
# A tiny stand-in for the world: the monitor only needs senses.
class Senses:
    def __init__(self, **values):
        self.values = values

    def sense(self, ref):
        return self.values.get(ref.name, False) != ref.negate


monitor = OperaAgent("p5", "position5", org, library=catalog)
mind = AgentMind("p5", plan)

# %%
# Both heroes at the wave, and the support has just finished a farming step.
near = Senses(partnerNearby=True, creepsNearby=True, highestPriorityAround=True, isFarmingTime=True, isSafeToFarm=True)
monitor.after_tick(mind, near, TickResult("DE-FarmLane", "rightClickAttack", ("DE-FarmLane", "success")), tick=10)
print(mind.plan.drive_order())

# %%
# The carry walks off; the scene ends and the plan is restored.
monitor.after_tick(mind, Senses(partnerNotNearby=True), TickResult(), tick=11)
print(mind.plan.drive_order())
for record in monitor.log:
    print(record.to_json())
