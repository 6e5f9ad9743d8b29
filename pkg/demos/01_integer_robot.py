"""
A robot on the integer line
===========================

The robot senses its position exactly and steps toward zero.  Its
nondeterministic I-state is the set of positions it considers possible;
with a perfect sensor that set is a single point.
"""

# %%
from perceng import instantiate_scenario, simulate
from perceng.plausibility import classify_trace

sc = instantiate_scenario("intbot", {"x1": -5, "window": 8})
trace = simulate(sc.system, sc.omega1, 8)

for rec in trace:
    a = rec.agents[0]
    print(f"k={rec.k}  x={rec.omega:+d}  y={a.y:+d}  X(eta)={sorted(a.istate.possible)}  u={a.u}")

# %%
# Nothing interferes with the robot, so every stage is plausible and none
# is illusory.
c = classify_trace(trace, sc.relations[0])
print("plausible experience:", c.plausible_experience)
print("illusory stages:", sum(c.illusion))

# %%
# A history I-state carries the same information, just uncompressed.
hist = instantiate_scenario("intbot", {"x1": -5, "window": 8, "ispace": "history"})
last = simulate(hist.system, hist.omega1, 8)[-1].agents[0].istate
print("history after 8 stages:", last.observations)
