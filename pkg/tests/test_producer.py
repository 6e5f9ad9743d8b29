import math

import pytest

from perceng.agents import AgentModel, Correspondence, ExtrinsicWorld
from perceng.errors import BudgetExceeded, Infeasible
from perceng.metrics import margin_at
from perceng.producer import (
    CostModel,
    Goal,
    StationarySetting,
    evaluate_policy_probabilistic,
    evaluate_policy_worst_case,
    plan_action_sequence,
    replay_satisfies,
    rollout,
    select_stationary_action,
    sequence_cost,
    stationary_guarantee,
    success_probability,
    validate_goal,
)
from perceng.relations import RelationSet
from perceng.scenarios import instantiate_scenario
from perceng.simulation import Resolver, System
from perceng.spaces import Space


# -- goals -----------------------------------------------------------------

@pytest.mark.parametrize("goal,horizon", [
    (Goal("observation_sequence", (3, None)), 2),
    (Goal("observation_sequence", (None, 1, 2, 3)), 2),
    (Goal("reach_at_stage", (1,), stage=1), 3),
    (Goal("reach_at_stage", (1,), stage=5), 3),
])
def test_goals_the_producer_cannot_influence(goal, horizon):
    with pytest.raises(Infeasible):
        validate_goal(goal, horizon)


@pytest.mark.parametrize("kwargs", [
    dict(kind="nope", payload=(1,)),
    dict(kind="observation_set", payload=()),
    dict(kind="reach_at_stage", payload=(1,)),
    dict(kind="observation_set", payload=(1,), on="x"),
])
def test_malformed_goals(kwargs):
    with pytest.raises(ValueError):
        Goal(**kwargs)


def test_goal_tolerance():
    g = Goal("observation_set", ((1.0, 2.0),), tol=1e-6)
    assert g.observation_ok((1.0 + 1e-7, 2.0))
    assert not g.observation_ok((1.0 + 1e-5, 2.0))


# -- stationary ------------------------------------------------------------

def test_trilateration_goal_picks_intensity_two():
    sc = instantiate_scenario("trilateration", {"n": 1})
    goal = Goal("observation_set", ((math.sqrt(2),),), tol=1e-9)
    choice = select_stationary_action(sc.stationary, sc.agents[0], sc.relations[0], goal)
    assert choice.action == 2.0
    assert choice.feasible == 1


def test_unreachable_stationary_goal_is_infeasible():
    sc = instantiate_scenario("trilateration", {"n": 1})
    with pytest.raises(Infeasible):
        select_stationary_action(sc.stationary, sc.agents[0], sc.relations[0],
                                 Goal("observation_set", ((0.1,),), tol=1e-9))


def test_landmark_illusion_requires_the_displaced_landmark():
    sc = instantiate_scenario("landmark_static", {"x1": 1})
    goal = Goal("observation_set", (4,), require_plausible=True, require_illusory=True)
    choice = select_stationary_action(sc.stationary, sc.agents[0], sc.relations[0], goal)
    assert choice.action == 5 and choice.omega == (1, 5)
    with pytest.raises(Infeasible):
        select_stationary_action(sc.stationary, sc.agents[0], sc.relations[0],
                                 Goal("observation_set", (1,), require_illusory=True))


def test_margin_aware_cost_prefers_the_most_robust_percept():
    sc = instantiate_scenario("landmark_static", {"x1": 0})
    space, member = sc.sweep("y")
    cost = CostModel.margin_aware(0.0, lambda y: margin_at(y, space, member))
    goal = Goal("observation_set", lambda y: abs(y) <= 10)
    choice = select_stationary_action(sc.stationary, sc.agents[0], sc.relations[0], goal, cost)
    assert choice.observation == 0
    assert choice.cost == -11


def test_guarantee_under_set_valued_production():
    setting = StationarySetting(Space.integers(0, 6), produce_set=lambda u: {u - 1, u, u + 1},
                                sense=lambda w: w)
    goal = {0, 1, 2}
    assert stationary_guarantee(1, setting, goal) == "guaranteed"
    assert stationary_guarantee(3, setting, goal) == "possible"
    assert stationary_guarantee(5, setting, goal) == "impossible"


def test_success_probability_double_sum():
    setting = StationarySetting(Space.integers(0, 3), produce_pmf=lambda u: {u: 0.5, u + 1: 0.5},
                                sense_pmf=lambda w: {w: 0.8, w + 1: 0.2})
    assert success_probability(0, setting, {1}) == pytest.approx(0.5, abs=1e-15)
    assert success_probability(0, setting, lambda y: y >= 0) == pytest.approx(1.0)


# -- sequence planning -------------------------------------------------------

@pytest.fixture
def moving_landmark():
    return instantiate_scenario("landmark_dynamic", {"receiver_motion": "any"})


def test_canonical_tie_break(moving_landmark):
    sc = moving_landmark
    plan = plan_action_sequence(sc.system, sc.omega1, Goal("reach_at_stage", (1,), stage=3), 2)
    assert plan.actions == (0, 1)
    assert plan.verified


def test_cheapest_sequence_under_action_cost(moving_landmark):
    sc = moving_landmark
    cost = CostModel(stage=lambda w, up, y, i, ur: abs(up), nonnegative=True)
    goal = Goal("observation_sequence", (None, None, 2, None))
    plan = plan_action_sequence(sc.system, sc.omega1, goal, 3, cost)
    assert plan.actions == (1, 1, 0) and plan.cost == 2
    assert sequence_cost(sc.system, sc.omega1, plan.actions, cost) == 2
    assert replay_satisfies(sc.system, sc.omega1, goal, plan.actions)


def test_plausibility_constraint_keeps_the_landmark_still():
    sc = instantiate_scenario("landmark_dynamic", {})
    goal = Goal("reach_at_any_stage", (0,), require_plausible=True)
    plan = plan_action_sequence(sc.system, sc.omega1, goal, 3)
    assert plan.actions == (0, 0, 0)
    with pytest.raises(Infeasible):
        plan_action_sequence(sc.system, sc.omega1,
                             Goal("reach_at_any_stage", (2,), require_plausible=True), 3)


def test_budget_exceeded(moving_landmark):
    sc = moving_landmark
    with pytest.raises(BudgetExceeded):
        plan_action_sequence(sc.system, sc.omega1, Goal("reach_at_stage", (9,), stage=6), 5,
                             budget=50)


def test_doorway_plan_holds_position():
    sc = instantiate_scenario("gridbot_illusion", {})
    goal = Goal("istate_set", sc.goal_targets["small_room"], require_plausible=True,
                require_illusory=True)
    plan = plan_action_sequence(sc.system, sc.omega1, goal, 16, sc.plan_cost)
    assert plan.cost == 0 and set(plan.actions) == {2} and plan.verified


# -- policy evaluation -------------------------------------------------------

def test_worst_case_matches_deterministic_rollout():
    sc = instantiate_scenario("landmark_dynamic", {"receiver_motion": "any"})
    goal = Goal("reach_at_any_stage", (3,))
    track = sc.extras["track"]
    res = evaluate_policy_worst_case(sc.system, sc.omega1, track, goal, 4)
    assert res.branches == 1 and res.verdict == "guaranteed"
    assert rollout(sc.system, sc.omega1, track, goal, 4, Resolver(0))


def test_worst_case_with_slip_enumerates_branches():
    sc = instantiate_scenario("landmark_dynamic", {"receiver_motion": "any", "slip": True})
    goal = Goal("reach_at_stage", (3,), stage=4)
    res = evaluate_policy_worst_case(sc.system, sc.omega1, sc.extras["track"], goal, 3)
    assert res.branches == 27
    assert res.verdict == "possible"
    hits = sum(rollout(sc.system, sc.omega1, sc.extras["track"], goal, 3, Resolver(s))
               for s in range(40))
    assert 0 < hits < 40


def coin_system():
    X = Space.integers(0, 2)
    ident = Correspondence(alpha=lambda w: w)
    receiver = AgentModel("r", X, Space((0,)), X, "ndet", xtf_set=lambda x, u: X.elements,
                          sensor=lambda x: x, policy=lambda s: 0)
    producer = AgentModel("p", X, Space((0, 1)), X, "stage_feedback", policy=lambda k: 1)
    world = ExtrinsicWorld(X, utf_pmf=lambda w, us: {min(w + us[1], 2): 0.7, w: 0.3}
                           if us[1] and w < 2 else {w: 1.0},
                           sensors=(lambda w: w, lambda w: w), correspondences=(ident, ident))
    return System(world, (receiver, producer), (RelationSet(X, ident), None), 0, 1)


def test_markov_chain_success_and_cost():
    system = coin_system()
    cost = CostModel.per_action(lambda u: u)
    res = evaluate_policy_probabilistic(system, 0, None, Goal("reach_at_stage", (2,), stage=3), 2, cost)
    assert res.success_probability == pytest.approx(0.49, abs=1e-12)
    # pushes at stage 1 always, at stage 2 only from state 1 or 0 (state 2 absorbs)
    assert res.expected_cost == pytest.approx(2.0, abs=1e-12)
    res = evaluate_policy_probabilistic(system, 0, None, Goal("reach_at_any_stage", (1, 2)), 2)
    assert res.success_probability == pytest.approx(1 - 0.3 * 0.3, abs=1e-12)
