"""
Planning for the producer
=========================

The producer searches over its own action sequences for the cheapest one
that drives the receiver to a target I-state or observation, optionally
while staying plausible.
"""

# %%
from perceng import instantiate_scenario
from perceng.errors import Infeasible
from perceng.producer import Goal, evaluate_policy_worst_case, plan_action_sequence

sc = instantiate_scenario("gridbot_illusion")
goal = Goal("istate_set", sc.goal_targets["small_room"], require_plausible=True,
            require_illusory=True)
plan = plan_action_sequence(sc.system, sc.omega1, goal, 16, sc.plan_cost)
print(f"doorway plan: {plan.actions}  cost={plan.cost}  nodes={plan.nodes}  verified={plan.verified}")

# %%
# A landmark that may move one step per stage.  A receiver that expects it
# to stay put notices any motion, so plausible goals are limited.
lm = instantiate_scenario("landmark_dynamic")
try:
    plan_action_sequence(lm.system, lm.omega1,
                         Goal("reach_at_any_stage", (2,), require_plausible=True), 3)
except Infeasible as exc:
    print("infeasible:", exc.diagnostic)

loose = instantiate_scenario("landmark_dynamic", {"receiver_motion": "any"})
plan = plan_action_sequence(loose.system, loose.omega1,
                            Goal("reach_at_stage", (2,), stage=4, require_plausible=True), 3)
print("receiver tolerant of motion:", plan.actions)

# %%
# With slip in the receiver's motion, a feedback policy is judged over all
# branches of the world.
slip = instantiate_scenario("landmark_dynamic", {"receiver_motion": "any", "slip": True})
res = evaluate_policy_worst_case(slip.system, slip.omega1, slip.extras["track"],
                                 Goal("reach_at_stage", (3,), stage=4), 3)
print(f"track policy: {res.verdict} over {res.branches} branches")
