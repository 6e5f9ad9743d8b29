"""I-state transition functions: history, nondeterministic and Bayesian filters.

The nondeterministic filter keeps the set of X-states consistent with the
history; prediction pushes the set through the transition model and the
update intersects it with the preimage of the new observation.  The
probabilistic filter is the discrete Bayes filter: marginalize through
``p(x'|x,u)``, multiply by ``p(y|x')``, renormalize.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional

from .agents import AgentModel
from .errors import ZeroEvidence
from .spaces import canonical_sorted

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class HistoryIState:
    """Full action/observation record; ``eta_1 = ((), (y1,))``."""

    actions: tuple = ()
    observations: tuple = ()

    def __post_init__(self):
        if len(self.observations) != len(self.actions) + 1:
            raise ValueError("a history holds exactly one more observation than actions")

    @property
    def stage(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class NdetIState:
    """The set of X-states consistent with the history; empty is implausible."""

    possible: frozenset

    def __len__(self):
        return len(self.possible)

    def __contains__(self, x):
        return x in self.possible


class ProbIState:
    """A finite pmf over X.  An empty pmf marks probabilistic implausibility."""

    __slots__ = ("pmf", "_hash")

    def __init__(self, pmf: Mapping):
        pmf = {x: float(p) for x, p in pmf.items() if p > 0}
        if pmf:
            total = math.fsum(pmf.values())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"pmf masses sum to {total}, not 1")
        self.pmf = pmf
        self._hash = None

    @classmethod
    def normalized(cls, weights: Mapping) -> "ProbIState":
        total = math.fsum(w for w in weights.values() if w > 0)
        if total <= 0:
            raise ZeroEvidence("all weights are zero")
        return cls({x: w / total for x, w in weights.items() if w > 0})

    @classmethod
    def implausible(cls) -> "ProbIState":
        return cls({})

    def __getitem__(self, x) -> float:
        return self.pmf.get(x, 0.0)

    def support(self) -> frozenset:
        return frozenset(self.pmf)

    def __eq__(self, other):
        return isinstance(other, ProbIState) and self.pmf == other.pmf

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.pmf.items()))
        return self._hash

    def __repr__(self):
        return f"ProbIState({len(self.pmf)} states)"


# -- history ---------------------------------------------------------------

def history_initial(y1) -> HistoryIState:
    return HistoryIState((), (y1,))


def history_step(eta: HistoryIState, u, y) -> HistoryIState:
    return HistoryIState(eta.actions + (u,), eta.observations + (y,))


# -- nondeterministic ------------------------------------------------------

def _as_set(istate) -> frozenset:
    return istate.possible if isinstance(istate, NdetIState) else frozenset(istate)


def ndet_predict(istate, u, model, set_valued: bool = False) -> NdetIState:
    """Image of the possible set under the transition model.

    ``model`` is an ``AgentModel`` (any mode, results restricted to its X)
    or a bare transition function (``set_valued`` for an ``F``).
    """
    out = set()
    if isinstance(model, AgentModel):
        for x in _as_set(istate):
            out.update(model.successors(x, u))
        xs = model.x_space
        return NdetIState(frozenset(x for x in out if x in xs))
    for x in _as_set(istate):
        if set_valued:
            out.update(model(x, u))
        else:
            out.add(model(x, u))
    return NdetIState(frozenset(out))


def ndet_update(istate, y, model, set_valued: bool = False) -> NdetIState:
    """Intersect the predicted set with the preimage of ``y``.

    Computed by filtering the members, which equals ``X_pred & h^-1(y)``
    without enumerating X.
    """
    members = _as_set(istate)
    if isinstance(model, AgentModel):
        return NdetIState(frozenset(x for x in members if model.consistent(x, y)))
    if set_valued:
        return NdetIState(frozenset(x for x in members if y in model(x)))
    return NdetIState(frozenset(x for x in members if model(x) == y))


def ndet_initial(agent: AgentModel, y1) -> NdetIState:
    if agent.initial is not None:
        return ndet_update(agent.initial, y1, agent)
    return NdetIState(agent.preimage(y1))


def ndet_step(istate, u, y, agent: AgentModel) -> NdetIState:
    return ndet_update(ndet_predict(istate, u, agent), y, agent)


# -- probabilistic ---------------------------------------------------------

def prob_predict(istate: ProbIState, u, agent: AgentModel) -> dict:
    """Marginalize the belief through ``p(x'|x,u)``; returns a pmf dict."""
    pred = defaultdict(float)
    xs = agent.x_space
    for x, px in istate.pmf.items():
        for x2, p in agent.transition_pmf(x, u).items():
            if p > 0 and x2 in xs:
                pred[x2] += p * px
    return dict(pred)


def prob_update(prediction: Mapping, y, agent: AgentModel) -> ProbIState:
    """Bayes' rule against ``p(y|x')``; raises ``ZeroEvidence`` if impossible."""
    weights = {x: agent.likelihood(y, x) * p for x, p in prediction.items()}
    if math.fsum(weights.values()) <= 0:
        raise ZeroEvidence(f"observation {y!r} has zero probability under the prediction")
    return ProbIState.normalized(weights)


def prob_initial(agent: AgentModel, y1) -> ProbIState:
    return prob_update(dict(agent.prior), y1, agent)


def prob_step(istate: ProbIState, u, y, agent: AgentModel) -> ProbIState:
    return prob_update(prob_predict(istate, u, agent), y, agent)


# -- dispatch by I-space family --------------------------------------------

def initial_istate(agent: AgentModel, y1):
    """Stage-1 I-state from the first observation."""
    kind = agent.i_space_kind
    if kind == "history":
        return history_initial(y1)
    if kind in ("ndet", "state_feedback", "sensor_feedback"):
        return ndet_initial(agent, y1)
    if kind == "prob":
        try:
            return prob_initial(agent, y1)
        except ZeroEvidence:
            return ProbIState.implausible()
    if kind == "stage_feedback":
        return 1
    return agent.itf_init(y1)


def update_istate(agent: AgentModel, istate, u, y):
    """One application of the agent's ITF.

    Zero evidence in the Bayes filter yields the empty (implausible) pmf
    rather than an exception so that a simulation can record it.
    """
    kind = agent.i_space_kind
    if kind == "history":
        return history_step(istate, u, y)
    if kind in ("ndet", "state_feedback"):
        return ndet_step(istate, u, y, agent)
    if kind == "sensor_feedback":
        return NdetIState(agent.preimage(y))
    if kind == "prob":
        if not istate.pmf:
            return istate
        try:
            return prob_step(istate, u, y, agent)
        except ZeroEvidence:
            return ProbIState.implausible()
    if kind == "stage_feedback":
        return istate + 1
    return agent.itf(istate, u, y)


def filter_history(agent: AgentModel, eta: HistoryIState):
    """Run the agent's ITF over a whole history."""
    istate = initial_istate(agent, eta.observations[0])
    for u, y in zip(eta.actions, eta.observations[1:]):
        istate = update_istate(agent, istate, u, y)
    return istate


# -- sufficiency -----------------------------------------------------------

@dataclass
class SufficiencyReport:
    """Outcome of a sufficiency check; violations are data, not errors.

    Violation kinds:

    ``itf``        kappa(phi_hist(eta,u,y)) differs from derived_itf(kappa(eta),u,y)
    ``class``      histories sharing kappa(eta) disagree on kappa after (u, y)
    ``reference``  histories sharing kappa(eta) disagree on the reference I-state
    ``decode``     decode(kappa(eta)) differs from the reference I-state
    """

    histories: int = 0
    transitions: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def count(self, kind) -> int:
        return sum(1 for v in self.violations if v[0] == kind)


def check_sufficiency(
    kappa: Callable,
    histories: Iterable[HistoryIState],
    derived_itf: Optional[Callable] = None,
    reference: Optional[Callable] = None,
    decode: Optional[Callable] = None,
    max_violations: int = 100,
) -> SufficiencyReport:
    """Check that a derived I-space admits a well-defined ITF.

    ``histories`` should be prefix-closed; every parent/child pair in it is
    a checked transition.  ``reference`` maps a history to the I-state the
    derived one must determine (for example the nondeterministic filter
    state); ``decode`` maps a derived I-state back into that reference form.
    """
    hs = set(histories)
    report = SufficiencyReport(histories=len(hs))
    kv = {eta: kappa(eta) for eta in hs}

    def add(kind, eta, detail):
        if len(report.violations) < max_violations:
            report.violations.append((kind, eta, detail))
        else:
            report.violations[-1] = (kind, eta, detail)

    nexts = defaultdict(set)
    for eta in hs:
        if not eta.actions:
            continue
        parent = HistoryIState(eta.actions[:-1], eta.observations[:-1])
        if parent not in kv:
            continue
        u, y = eta.actions[-1], eta.observations[-1]
        report.transitions += 1
        if derived_itf is not None:
            expected = derived_itf(kv[parent], u, y)
            if expected != kv[eta]:
                add("itf", eta, (expected, kv[eta]))
        nexts[(kv[parent], u, y)].add(kv[eta])
    for key, outs in nexts.items():
        if len(outs) > 1:
            add("class", key, outs)

    if reference is not None:
        refs = {}
        ref_cache = {eta: reference(eta) for eta in hs}
        for eta in hs:
            k = kv[eta]
            r = ref_cache[eta]
            if k in refs and refs[k][1] != r:
                add("reference", eta, refs[k][0])
            refs.setdefault(k, (eta, r))
            if decode is not None and decode(k) != r:
                add("decode", eta, None)
    return report


def reachable_histories(agent: AgentModel, depth: int, actions=None, initial=None) -> set:
    """Histories realizable under the agent's intrinsic model.

    Enumerates every initial state (``initial`` or the agent's ``initial``
    or X), every action sequence of length up to ``depth`` and every
    disturbance outcome.  The result is prefix-closed.
    """
    actions = list(agent.u_space) if actions is None else list(actions)
    starts = initial if initial is not None else agent.initial
    if starts is None:
        starts = agent.x_space
    out = set()
    frontier = set()
    for x in starts:
        for y in agent.observations(x):
            eta = history_initial(y)
            frontier.add((x, eta))
            out.add(eta)
    for _ in range(depth):
        nxt = set()
        for x, eta in frontier:
            for u in actions:
                for x2 in agent.successors(x, u):
                    if x2 not in agent.x_space:
                        continue
                    for y in agent.observations(x2):
                        e2 = history_step(eta, u, y)
                        nxt.add((x2, e2))
                        out.add(e2)
        frontier = nxt
    return out


def world_histories(world, agent_index: int, omega1s, depth: int, action_sets) -> set:
    """Histories of one agent generated by the extrinsic world.

    Every agent's action is drawn from ``action_sets[i]`` independently at
    every stage, so the result covers all joint action sequences.
    """
    out = set()
    frontier = set()
    for w in omega1s:
        for y in world.observations(agent_index, w):
            eta = history_initial(y)
            frontier.add((w, eta))
            out.add(eta)
    joint = list(itertools.product(*action_sets))
    for _ in range(depth):
        nxt = set()
        for w, eta in frontier:
            for us in joint:
                for w2 in world.successors(w, us):
                    for y in world.observations(agent_index, w2):
                        e2 = history_step(eta, us[agent_index], y)
                        nxt.add((w2, e2))
                        out.add(e2)
        frontier = nxt
    return out


def describe(istate) -> str:
    if isinstance(istate, NdetIState):
        return "{" + ", ".join(map(repr, canonical_sorted(istate.possible))) + "}"
    return repr(istate)
