"""The coupled producer/receiver system: one-stage stepping and full runs.

Per stage the order is fixed: each agent reads its I-state and acts, the
universe transitions, every agent senses the new universe state, and every
I-state is updated.  Stage 1 starts from ``omega_1`` and the I-state built
from ``y_1``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .agents import AgentModel, ExtrinsicWorld
from .errors import DisturbanceUnresolved, OutsideWindow
from .filters import initial_istate, update_istate
from .plausibility import is_illusion, is_plausible
from .spaces import canonical_sorted


@dataclass(frozen=True)
class OmniscientView:
    """What an omniscient agent sees in place of its own I-state."""

    stage: int
    omega: Any
    observations: tuple
    istates: tuple


@dataclass(frozen=True)
class SystemState:
    stage: int
    omega: Any
    observations: tuple
    istates: tuple


class Resolver:
    """Seeded resolution of nondeterministic and probabilistic outcomes.

    Set-valued outcomes are chosen uniformly after canonical sorting, so a
    seed reproduces the same run in any process.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose(self, options):
        opts = canonical_sorted(options)
        if not opts:
            raise ValueError("cannot choose from an empty outcome set")
        return opts[self.rng.randrange(len(opts))]

    def sample(self, pmf: Mapping):
        items = [(k, pmf[k]) for k in canonical_sorted(pmf) if pmf[k] > 0]
        r = self.rng.random() * sum(p for _, p in items)
        acc = 0.0
        for k, p in items:
            acc += p
            if r < acc:
                return k
        return items[-1][0]


@dataclass(frozen=True)
class System:
    """A world with its agents and each agent's relations (or None)."""

    world: ExtrinsicWorld
    agents: tuple
    relations: tuple = ()
    receiver: int = 0
    producer: Optional[int] = None

    def relation(self, i):
        return self.relations[i] if i < len(self.relations) else None

    def with_agent(self, i, agent: AgentModel) -> "System":
        agents = list(self.agents)
        agents[i] = agent
        return System(self.world, tuple(agents), self.relations, self.receiver, self.producer)


def _transition(world: ExtrinsicWorld, omega, actions, resolver):
    if world.utf is not None:
        return world.utf(omega, actions)
    if resolver is None:
        raise DisturbanceUnresolved("nondeterministic or probabilistic UTF needs a resolver")
    if world.utf_set is not None:
        return resolver.choose(world.utf_set(omega, actions))
    return resolver.sample(world.utf_pmf(omega, actions))


def _sense(world: ExtrinsicWorld, i, omega, resolver):
    if world.sensors is not None:
        return world.sensors[i](omega)
    if resolver is None:
        raise DisturbanceUnresolved("nondeterministic or probabilistic sensor needs a resolver")
    if world.sensors_set is not None:
        return resolver.choose(world.sensors_set[i](omega))
    return resolver.sample(world.sensors_pmf[i](omega))


def _with_views(agents, stage, omega, observations, istates):
    if not any(a.omniscient for a in agents):
        return tuple(istates)
    out = list(istates)
    for i, a in enumerate(agents):
        if a.omniscient:
            others = tuple(None if j == i else s for j, s in enumerate(istates))
            out[i] = OmniscientView(stage, omega, tuple(observations), others)
    return tuple(out)


def initial_state(world: ExtrinsicWorld, agents: Sequence[AgentModel], omega1,
                  resolver: Optional[Resolver] = None) -> SystemState:
    if omega1 not in world.omega:
        raise OutsideWindow(f"initial universe state {omega1!r} outside the window")
    ys = tuple(_sense(world, i, omega1, resolver) for i in range(len(agents)))
    return initial_from(agents, omega1, ys)


def choose_actions(agents, state: SystemState, actions: Optional[Mapping] = None) -> tuple:
    actions = actions or {}
    return tuple(actions[i] if i in actions else a.act(s)
                 for i, (a, s) in enumerate(zip(agents, state.istates)))


def step_coupled_system(world: ExtrinsicWorld, agents: Sequence[AgentModel], state: SystemState,
                        resolver: Optional[Resolver] = None,
                        actions: Optional[Mapping] = None):
    """Advance the coupled system by one stage.

    ``actions`` optionally forces some agents' actions (by agent index),
    bypassing their policies.  Returns ``(next_state, actions_taken)``.
    """
    us = choose_actions(agents, state, actions)
    omega2 = _transition(world, state.omega, us, resolver)
    if omega2 not in world.omega:
        raise OutsideWindow(f"universe state {omega2!r} left the window at stage {state.stage + 1}")
    ys = tuple(_sense(world, i, omega2, resolver) for i in range(len(agents)))
    return advance(agents, state, us, omega2, ys), us


def advance(agents, state: SystemState, us, omega2, ys) -> SystemState:
    """Filter updates for an already-resolved transition and observations."""
    istates = tuple(
        None if a.omniscient else update_istate(a, s, u, y)
        for a, s, u, y in zip(agents, state.istates, us, ys)
    )
    k = state.stage + 1
    return SystemState(k, omega2, tuple(ys), _with_views(agents, k, omega2, ys, istates))


def initial_from(agents, omega1, ys) -> SystemState:
    istates = tuple(None if a.omniscient else initial_istate(a, y) for a, y in zip(agents, ys))
    return SystemState(1, omega1, tuple(ys), _with_views(agents, 1, omega1, ys, istates))


# -- traces ----------------------------------------------------------------

@dataclass(frozen=True)
class AgentStage:
    u: Any
    y: Any
    istate: Any
    plausible: Optional[bool] = None
    illusion: Optional[bool] = None


@dataclass(frozen=True)
class StageRecord:
    k: int
    omega: Any
    agents: tuple


@dataclass
class Trace:
    """Per-stage records; the receiver's I-state sequence is its perceptual experience."""

    records: list = field(default_factory=list)
    names: tuple = ()

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def experience(self, agent: int) -> list:
        return [r.agents[agent].istate for r in self.records]

    def omegas(self) -> list:
        return [r.omega for r in self.records]

    def observations(self, agent: int) -> list:
        return [r.agents[agent].y for r in self.records]

    def actions(self, agent: int) -> list:
        return [r.agents[agent].u for r in self.records[:-1]]


def annotate(relations, istate, omega):
    """(plausible, illusion) flags, or (None, None) without relations."""
    if relations is None:
        return None, None
    plausible = is_plausible(istate, relations)
    if relations.correspondence is None:
        return plausible, None
    return plausible, is_illusion(istate, omega, relations)


def record(system: System, state: SystemState, us=None) -> StageRecord:
    agents = []
    for i, (y, s) in enumerate(zip(state.observations, state.istates)):
        p, ill = annotate(system.relation(i), s, state.omega)
        agents.append(AgentStage(None if us is None else us[i], y, s, p, ill))
    return StageRecord(state.stage, state.omega, tuple(agents))


def simulate(system: System, omega1, stages: int, resolver: Optional[Resolver] = None,
             forced: Optional[Mapping] = None) -> Trace:
    """Run ``stages`` stage records (actions at stages 1..stages-1).

    ``forced`` maps agent index to an action sequence indexed from stage 1,
    used to replay producer plans.
    """
    if stages < 1:
        raise ValueError("need at least one stage")
    state = initial_state(system.world, system.agents, omega1, resolver)
    trace = Trace(names=tuple(a.name for a in system.agents))
    for _ in range(stages - 1):
        acts = None
        if forced:
            acts = {i: seq[state.stage - 1] for i, seq in forced.items()}
        nxt, us = step_coupled_system(system.world, system.agents, state, resolver, acts)
        trace.records.append(record(system, state, us))
        state = nxt
    trace.records.append(record(system, state))
    return trace
