"""
Moving a landmark
=================

A receiver at ``x1`` reads the signed distance to a landmark it believes
sits at ``2 * x1``.  Another agent that shifts the landmark produces a
reading the receiver still finds plausible, but which no longer matches
where it actually is.
"""

# %%
from perceng import instantiate_scenario, simulate
from perceng.plausibility import classify_trace
from perceng.producer import Goal, select_stationary_action

sc = instantiate_scenario("landmark_static", {"x1": 1, "offset": 3, "shift_stage": 3})
trace = simulate(sc.system, sc.omega1, 6)
c = classify_trace(trace, sc.relations[0])
for rec, p, i in zip(trace, c.plausible, c.illusion):
    a = rec.agents[0]
    print(f"k={rec.k}  world={rec.omega}  y={a.y:+d}  believed={sorted(a.istate.possible)}"
          f"  plausible={p}  illusion={i}")

# %%
# The producer can also ask which landmark placement yields a target
# reading while keeping the receiver fooled.
goal = Goal("observation_set", (4,), require_plausible=True, require_illusory=True)
choice = select_stationary_action(sc.stationary, sc.agents[0], sc.relations[0], goal)
print(f"place landmark at {choice.action}: receiver reads {choice.observation}")
