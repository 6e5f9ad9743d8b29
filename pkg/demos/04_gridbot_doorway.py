"""
A robot that blocks a doorway
=============================

A mapping robot explores a small room while a second robot stands in the
doorway.  The depth sensor cannot tell a robot from a wall, so the map
closes off the room: a plausible but false picture of the world.  If the
blocker walks away later, the next reading through the doorway contradicts
the map.
"""

# %%
from perceng import instantiate_scenario, simulate
from perceng.plausibility import classify_trace
from perceng.scenarios.grids import render_ascii

for producer in ("hold", "depart"):
    sc = instantiate_scenario("gridbot_illusion", {"producer": producer})
    trace = simulate(sc.system, sc.omega1, 40)
    c = classify_trace(trace, sc.relations[0], 0)
    print(f"producer {producer}: plausible throughout={c.plausible_experience}"
          f"  first implausible stage={c.first_implausible_stage}"
          f"  illusory stages={sum(c.illusion)}")

# %%
# The map the receiver holds while the doorway is blocked.
sc = instantiate_scenario("gridbot_illusion")
trace = simulate(sc.system, sc.omega1, 20)
m = trace[-1].agents[0].istate
print("\n".join(m.ascii()))
print("matches the closed-off room:", m.whites == sc.extras["local_room"])
print("\nactual environment:")
env = sc.extras["environment"]
print("\n".join(render_ascii(env.white_tiles, bounds=env.bounds, unknown="#")))
