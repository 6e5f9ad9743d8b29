"""Producer goals, costs, action selection, sequence planning and policy evaluation.

The producer acts at stage k and the receiver first senses the effect at
stage k + 1, so no goal may constrain the receiver's first observation.
Ties are always broken by canonical enumeration order of the producer's
actions (first found wins; a later candidate must be strictly cheaper).
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

from .agents import Correspondence
from .errors import BudgetExceeded, Infeasible
from .filters import initial_istate
from .plausibility import is_illusion
from .simulation import (
    Resolver,
    System,
    SystemState,
    advance,
    initial_from,
    initial_state,
    simulate,
    step_coupled_system,
)
from .spaces import Space, canonical_key

GOAL_KINDS = (
    "observation_set",
    "istate_set",
    "observation_sequence",
    "reach_at_any_stage",
    "reach_at_stage",
)

DEFAULT_BUDGET = 2_000_000


def _close(a, b, tol) -> bool:
    if tol <= 0:
        return a == b
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b) <= tol
    return a == b


@dataclass(frozen=True)
class Goal:
    """What the producer wants the receiver to perceive.

    ``payload`` is a collection of targets or a predicate.  For
    ``observation_sequence`` it is a sequence indexed from stage 1 with
    ``None`` for unconstrained stages.  Reach goals test ``on`` (the
    receiver's observation or I-state) at stages 2 onwards, or at ``stage``.
    ``tol`` compares numeric observations within an absolute tolerance.
    """

    kind: str
    payload: Any
    require_plausible: bool = False
    require_illusory: bool = False
    stage: Optional[int] = None
    on: str = "observation"
    tol: float = 0.0

    def __post_init__(self):
        if self.kind not in GOAL_KINDS:
            raise ValueError(f"unknown goal kind {self.kind!r}")
        if self.on not in ("observation", "istate"):
            raise ValueError("goal 'on' must be 'observation' or 'istate'")
        if not callable(self.payload) and not len(self.payload):
            raise ValueError("goal payload must be nonempty")
        if self.kind == "reach_at_stage" and self.stage is None:
            raise ValueError("reach_at_stage needs a stage")

    def _test(self, value, payload=None) -> bool:
        payload = self.payload if payload is None else payload
        if callable(payload):
            return bool(payload(value))
        return any(_close(value, t, self.tol) for t in payload)

    def observation_ok(self, y) -> bool:
        return self._test(y)

    def istate_ok(self, istate) -> bool:
        if callable(self.payload):
            return bool(self.payload(istate))
        return istate in self.payload

    def target_ok(self, y, istate) -> bool:
        if self.kind == "istate_set" or (self.kind.startswith("reach") and self.on == "istate"):
            return self.istate_ok(istate)
        return self.observation_ok(y)


def validate_goal(goal: Goal, horizon: int):
    """Reject goals the producer cannot influence (the first observation)."""
    if goal.kind == "observation_sequence":
        seq = list(goal.payload)
        if len(seq) > horizon + 1:
            raise Infeasible(f"goal sequence covers {len(seq)} stages, horizon has {horizon + 1}")
        if seq and seq[0] is not None:
            raise Infeasible("the producer cannot affect the receiver's first observation "
                             "(its first action is felt at stage 2)")
    if goal.kind == "reach_at_stage":
        if goal.stage <= 1:
            raise Infeasible("the producer cannot affect the receiver's first observation "
                             "(its first action is felt at stage 2)")
        if goal.stage > horizon + 1:
            raise Infeasible(f"goal stage {goal.stage} lies beyond the final stage {horizon + 1}")


@dataclass(frozen=True)
class _Progress:
    alive: bool = True
    reached: bool = False


class GoalMonitor:
    """Stage-by-stage goal bookkeeping shared by planners and evaluators."""

    def __init__(self, goal: Goal, relations, final_stage: int, receiver: int = 0):
        self.goal = goal
        self.relations = relations
        self.final_stage = final_stage
        self.receiver = receiver
        if (goal.require_plausible or goal.require_illusory) and relations is None:
            raise ValueError("plausibility/illusion requirements need receiver relations")

    def start(self) -> _Progress:
        return _Progress()

    def visit(self, progress: _Progress, state: SystemState) -> _Progress:
        if not progress.alive:
            return progress
        g = self.goal
        r = self.receiver
        k = state.stage
        y = state.observations[r]
        s = state.istates[r]
        final = k == self.final_stage
        if g.require_plausible and not self.relations.plausible(s):
            return _Progress(False, progress.reached)
        if g.require_illusory and not is_illusion(s, state.omega, self.relations):
            return _Progress(False, progress.reached)
        reached = progress.reached
        if g.kind in ("observation_set", "istate_set"):
            if final:
                reached = g.target_ok(y, s)
                if not reached:
                    return _Progress(False, False)
        elif g.kind == "observation_sequence":
            seq = g.payload
            if k <= len(seq) and seq[k - 1] is not None and not _close(y, seq[k - 1], g.tol):
                return _Progress(False, False)
            reached = final
        elif g.kind == "reach_at_any_stage":
            if k >= 2 and not reached and g.target_ok(y, s):
                reached = True
            if final and not reached:
                return _Progress(False, False)
        elif g.kind == "reach_at_stage":
            if k == g.stage:
                if not g.target_ok(y, s):
                    return _Progress(False, False)
                reached = True
        return _Progress(True, reached)

    def accepted(self, progress: _Progress) -> bool:
        return progress.alive and progress.reached


@dataclass(frozen=True)
class CostModel:
    """Stage cost ``l_k(omega, u_p, y_r, i_r, u_r)`` and final cost ``l_F(omega, y_r, i_r)``.

    Declare ``nonnegative`` to let the planner prune on partial cost.
    """

    stage: Optional[Callable] = None
    final: Optional[Callable] = None
    nonnegative: bool = False

    def stage_cost(self, omega, u_p, y_r, i_r, u_r) -> float:
        return float(self.stage(omega, u_p, y_r, i_r, u_r)) if self.stage else 0.0

    def final_cost(self, omega, y_r, i_r) -> float:
        return float(self.final(omega, y_r, i_r)) if self.final else 0.0

    @classmethod
    def per_action(cls, fn: Callable) -> "CostModel":
        return cls(stage=lambda w, up, y, i, ur: fn(up), nonnegative=False)

    @classmethod
    def margin_aware(cls, c: float, margin: Callable) -> "CostModel":
        """``c - PR(y)`` inside P and ``c + FFM(y)`` outside, on the stage observation."""

        def cost(y):
            m = margin(y)
            return c - m.pr if m.in_plausible_set else c + m.ffm

        return cls(stage=lambda w, up, y, i, ur: cost(y),
                   final=lambda w, y, i: cost(y))


# -- stationary percepts ---------------------------------------------------

@dataclass(frozen=True)
class StationarySetting:
    """The producer sets the universe once: ``omega = produce(u)``, ``y = sense(omega)``.

    Optional set- and pmf-valued variants model disturbance on the
    producer's action and on the receiver's sensing.
    """

    u_space: Space
    produce: Optional[Callable] = None
    sense: Optional[Callable] = None
    produce_set: Optional[Callable] = None
    produce_pmf: Optional[Callable] = None
    sense_set: Optional[Callable] = None
    sense_pmf: Optional[Callable] = None
    correspondence: Optional[Correspondence] = None

    def outcomes(self, u) -> frozenset:
        """All observations the action can enforce."""
        if self.produce is not None:
            omegas = {self.produce(u)}
        elif self.produce_set is not None:
            omegas = set(self.produce_set(u))
        else:
            omegas = {w for w, p in self.produce_pmf(u).items() if p > 0}
        out = set()
        for w in omegas:
            if self.sense is not None:
                out.add(self.sense(w))
            elif self.sense_set is not None:
                out.update(self.sense_set(w))
            else:
                out.update(y for y, p in self.sense_pmf(w).items() if p > 0)
        return frozenset(out)


@dataclass(frozen=True)
class StationaryChoice:
    action: Any
    cost: float
    omega: Any
    observation: Any
    istate: Any
    feasible: int


def select_stationary_action(setting: StationarySetting, receiver, relations, goal: Goal,
                             cost: Optional[CostModel] = None,
                             actions: Optional[Iterable] = None) -> StationaryChoice:
    """Cheapest producer action whose percept meets the goal and constraints.

    The receiver's percept is its stage-1 I-state built from the produced
    observation.  Raises ``Infeasible`` when no candidate qualifies.
    """
    if goal.kind not in ("observation_set", "istate_set"):
        raise ValueError("stationary goals are observation or I-state sets")
    candidates = list(setting.u_space) if actions is None else list(actions)
    best = None
    feasible = 0
    for u in candidates:
        w = setting.produce(u)
        y = setting.sense(w)
        s = initial_istate(receiver, y)
        if not goal.target_ok(y, s):
            continue
        if goal.require_plausible and not relations.plausible(s):
            continue
        if goal.require_illusory and not is_illusion(s, w, relations, setting.correspondence):
            continue
        feasible += 1
        c = cost.stage_cost(w, u, y, s, None) if cost else 0.0
        if best is None or c < best.cost:
            best = StationaryChoice(u, c, w, y, s, 0)
    if best is None:
        raise Infeasible(f"none of {len(candidates)} producer actions achieves the goal")
    return StationaryChoice(best.action, best.cost, best.omega, best.observation, best.istate, feasible)


def stationary_guarantee(u, setting: StationarySetting, goal_observations) -> str:
    """Worst/best-case verdict for a disturbed stationary action."""
    ys = setting.outcomes(u)
    ok = [y in goal_observations for y in ys]
    if all(ok):
        return "guaranteed"
    return "possible" if any(ok) else "impossible"


def success_probability(u, setting: StationarySetting, goal_observations) -> float:
    """Probability that the produced observation lands in the goal set.

    Double sum over producer outcomes and receiver observations of
    ``p(y | x_p) p(x_p | u)``, restricted to ``y`` in the goal set.
    """
    if setting.produce_pmf is not None:
        outcomes = setting.produce_pmf(u)
    elif setting.produce is not None:
        outcomes = {setting.produce(u): 1.0}
    else:
        raise ValueError("success probability needs a probabilistic or deterministic producer model")
    member = goal_observations if callable(goal_observations) else goal_observations.__contains__
    terms = []
    for w, pw in outcomes.items():
        if pw <= 0:
            continue
        if setting.sense_pmf is not None:
            ys = setting.sense_pmf(w)
        elif setting.sense is not None:
            ys = {setting.sense(w): 1.0}
        else:
            raise ValueError("success probability needs a probabilistic or deterministic sensor")
        terms.extend(py * pw for y, py in ys.items() if member(y))
    return min(1.0, math.fsum(terms))


# -- stage-feedback planning -----------------------------------------------

@dataclass
class Plan:
    actions: tuple
    cost: float
    nodes: int
    verified: Optional[bool] = None


def plan_action_sequence(system: System, omega1, goal: Goal, horizon: int,
                         cost: Optional[CostModel] = None, budget: int = DEFAULT_BUDGET,
                         actions: Optional[Sequence] = None, verify: bool = True) -> Plan:
    """Minimum-cost producer action sequence of length ``horizon``.

    Depth-first branch and bound over the fully predictable system; branches
    are cut as soon as the goal monitor fails and, for nonnegative costs,
    when the partial cost can no longer beat (or tie canonically ahead of)
    the incumbent.  Stage costs are summed
    over stages 1..horizon, plus the final cost at stage horizon + 1.
    """
    if system.producer is None:
        raise ValueError("system has no producer")
    if not system.world.deterministic:
        raise ValueError("sequence planning needs a deterministic world; use the policy evaluators")
    validate_goal(goal, horizon)
    cost = cost or CostModel(nonnegative=True)
    p, r = system.producer, system.receiver
    U = list(system.agents[p].u_space) if actions is None else list(actions)
    monitor = GoalMonitor(goal, system.relation(r), horizon + 1, r)
    final_stage = horizon + 1

    state = initial_state(system.world, system.agents, omega1)
    progress = monitor.visit(monitor.start(), state)
    best_cost = math.inf
    best_seq = None
    best_key = None
    nodes = 0

    # Children are expanded cheapest-first so good incumbents appear early;
    # ties on total cost still go to the canonically first sequence.
    def dfs(state, progress, acc, seq, key):
        nonlocal best_cost, best_seq, best_key, nodes
        if not progress.alive:
            return
        if state.stage == final_stage:
            total = acc + cost.final_cost(state.omega, state.observations[r], state.istates[r])
            if monitor.accepted(progress) and (
                    total < best_cost or (total == best_cost and key < best_key)):
                best_cost, best_seq, best_key = total, seq, key
            return
        if cost.nonnegative and best_seq is not None:
            if acc > best_cost or (acc == best_cost and key > best_key[:len(key)]):
                return
        children = []
        for idx, u in enumerate(U):
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded(f"plan search exceeded {budget} nodes")
            nxt, us = step_coupled_system(system.world, system.agents, state, actions={p: u})
            c = cost.stage_cost(state.omega, u, state.observations[r], state.istates[r], us[r])
            children.append((c, idx, u, nxt))
        if cost.nonnegative:
            children.sort(key=lambda t: (t[0], t[1]))
        for c, idx, u, nxt in children:
            dfs(nxt, monitor.visit(progress, nxt), acc + c, seq + (u,), key + (idx,))

    dfs(state, progress, 0.0, (), ())
    if best_seq is None:
        raise Infeasible(f"no producer sequence of length {horizon} achieves the goal "
                         f"({nodes} nodes searched)")
    plan = Plan(best_seq, best_cost, nodes)
    if verify:
        plan.verified = replay_satisfies(system, omega1, goal, plan.actions)
    return plan


def replay_satisfies(system: System, omega1, goal: Goal, sequence: Sequence) -> bool:
    """Replay a producer sequence through the simulator and re-check the goal."""
    horizon = len(sequence)
    trace = simulate(system, omega1, horizon + 1, forced={system.producer: tuple(sequence)})
    monitor = GoalMonitor(goal, system.relation(system.receiver), horizon + 1, system.receiver)
    progress = monitor.start()
    for rec in trace:
        state = SystemState(rec.k, rec.omega, tuple(a.y for a in rec.agents),
                            tuple(a.istate for a in rec.agents))
        progress = monitor.visit(progress, state)
    return monitor.accepted(progress)


def sequence_cost(system: System, omega1, sequence: Sequence, cost: CostModel) -> float:
    """Cumulative cost of a producer sequence, by direct simulation."""
    horizon = len(sequence)
    r = system.receiver
    trace = simulate(system, omega1, horizon + 1, forced={system.producer: tuple(sequence)})
    total = 0.0
    for rec in trace.records[:-1]:
        a = rec.agents[r]
        total += cost.stage_cost(rec.omega, rec.agents[system.producer].u, a.y, a.istate, a.u)
    last = trace.records[-1].agents[r]
    return total + cost.final_cost(trace.records[-1].omega, last.y, last.istate)


# -- policy evaluation -----------------------------------------------------

def _with_state_feedback(system: System, policy: Optional[Callable]) -> System:
    if policy is None or system.producer is None:
        return system
    p = system.producer
    agent = system.agents[p].with_policy(lambda view: policy(view.omega), omniscient=True)
    return system.with_agent(p, agent)


@dataclass
class WorstCaseResult:
    verdict: str
    worst_cost: float
    branches: int
    accepted: int


def evaluate_policy_worst_case(system: System, omega1, policy: Optional[Callable], goal: Goal,
                               horizon: int, cost: Optional[CostModel] = None,
                               budget: int = DEFAULT_BUDGET) -> WorstCaseResult:
    """Enumerate every branch of the nondeterministic system under a producer policy.

    ``policy`` maps a universe state to a producer action (state feedback);
    ``None`` keeps the producer's own policy.  The verdict is ``guaranteed``
    when every branch meets the goal, ``possible`` when some branch does and
    ``impossible`` otherwise; ``worst_cost`` is the maximum over branches.
    """
    system = _with_state_feedback(system, policy)
    cost = cost or CostModel()
    world, agents, r = system.world, system.agents, system.receiver
    monitor = GoalMonitor(goal, system.relation(r), horizon + 1, r)
    n = len(agents)
    stats = {"branches": 0, "accepted": 0, "worst": -math.inf, "nodes": 0}

    def tick():
        stats["nodes"] += 1
        if stats["nodes"] > budget:
            raise BudgetExceeded(f"branch enumeration exceeded {budget} nodes")

    def dfs(state, progress, acc):
        tick()
        if state.stage == horizon + 1:
            total = acc + cost.final_cost(state.omega, state.observations[r], state.istates[r])
            stats["branches"] += 1
            stats["accepted"] += monitor.accepted(progress)
            stats["worst"] = max(stats["worst"], total)
            return
        us = tuple(a.act(s) for a, s in zip(agents, state.istates))
        c = cost.stage_cost(state.omega, us[system.producer] if system.producer is not None else None,
                            state.observations[r], state.istates[r], us[r])
        for w2 in sorted(world.successors(state.omega, us), key=canonical_key):
            for ys in itertools.product(*(sorted(world.observations(i, w2), key=canonical_key) for i in range(n))):
                nxt = advance(agents, state, us, w2, ys)
                dfs(nxt, monitor.visit(progress, nxt), acc + c)

    for ys in itertools.product(*(sorted(world.observations(i, omega1), key=canonical_key) for i in range(n))):
        s1 = initial_from(agents, omega1, ys)
        dfs(s1, monitor.visit(monitor.start(), s1), 0.0)

    if stats["accepted"] == stats["branches"]:
        verdict = "guaranteed"
    elif stats["accepted"]:
        verdict = "possible"
    else:
        verdict = "impossible"
    return WorstCaseResult(verdict, stats["worst"], stats["branches"], stats["accepted"])


@dataclass
class ProbabilisticResult:
    success_probability: float
    expected_cost: float
    support_sizes: list = field(default_factory=list)


def evaluate_policy_probabilistic(system: System, omega1, policy: Optional[Callable], goal: Goal,
                                  horizon: int, cost: Optional[CostModel] = None) -> ProbabilisticResult:
    """Forward-propagate the Markov chain induced by a producer policy.

    The chain state is the full system state plus goal progress; the
    expected cost accumulates stage costs weighted by stage probabilities.
    """
    system = _with_state_feedback(system, policy)
    cost = cost or CostModel()
    world, agents, r = system.world, system.agents, system.receiver
    p = system.producer
    monitor = GoalMonitor(goal, system.relation(r), horizon + 1, r)
    n = len(agents)

    def obs_joint(w):
        pmfs = [world.observation_pmf(i, w) for i in range(n)]
        for combo in itertools.product(*(sorted(pm.items(), key=lambda kv: canonical_key(kv[0])) for pm in pmfs)):
            prob = math.prod(pr for _, pr in combo)
            if prob > 0:
                yield tuple(y for y, _ in combo), prob

    dist = defaultdict(float)
    for ys, pr in obs_joint(omega1):
        s1 = initial_from(agents, omega1, ys)
        dist[(s1, monitor.visit(monitor.start(), s1))] += pr
    sizes = [len(dist)]
    expected = []
    for _ in range(horizon):
        nxt = defaultdict(float)
        for (state, progress), pr in dist.items():
            us = tuple(a.act(s) for a, s in zip(agents, state.istates))
            expected.append(pr * cost.stage_cost(state.omega, us[p] if p is not None else None,
                                                 state.observations[r], state.istates[r], us[r]))
            for w2, pw in world.transition_pmf(state.omega, us).items():
                if pw <= 0:
                    continue
                for ys, py in obs_joint(w2):
                    s2 = advance(agents, state, us, w2, ys)
                    nxt[(s2, monitor.visit(progress, s2))] += pr * pw * py
        dist = nxt
        sizes.append(len(dist))
    success = []
    for (state, progress), pr in dist.items():
        expected.append(pr * cost.final_cost(state.omega, state.observations[r], state.istates[r]))
        if monitor.accepted(progress):
            success.append(pr)
    return ProbabilisticResult(min(1.0, math.fsum(success)), math.fsum(expected), sizes)


def rollout(system: System, omega1, policy: Optional[Callable], goal: Goal, horizon: int,
            resolver: Resolver) -> bool:
    """One seeded random run under the policy; True iff the goal is met."""
    system = _with_state_feedback(system, policy)
    r = system.receiver
    monitor = GoalMonitor(goal, system.relation(r), horizon + 1, r)
    state = initial_state(system.world, system.agents, omega1, resolver)
    progress = monitor.visit(monitor.start(), state)
    for _ in range(horizon):
        state, _us = step_coupled_system(system.world, system.agents, state, resolver)
        progress = monitor.visit(progress, state)
    return monitor.accepted(progress)

