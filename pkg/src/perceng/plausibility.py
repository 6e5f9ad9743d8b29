"""Plausibility, illusions, perceptual-experience classification and KL surprise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import SupportMismatch
from .filters import ProbIState
from .relations import RelationSet


def is_plausible(istate, relations: RelationSet) -> bool:
    """True iff some X-state is related to ``istate`` under the model relation."""
    return relations.plausible(istate)


def is_illusion(istate, omega, relations: RelationSet, correspondence=None) -> bool:
    """A plausible I-state that does not correspond to the universe state."""
    if not relations.plausible(istate):
        return False
    return not relations.reality(istate, omega, correspondence)


@dataclass(frozen=True)
class TraceClassification:
    plausible_experience: bool
    illusory_experience: bool
    first_implausible_stage: Optional[int]
    plausible: tuple
    illusion: tuple


def classify_trace(trace, relations: RelationSet, agent: int = 0,
                   correspondence=None) -> TraceClassification:
    """Classify one agent's perceptual experience over a trace.

    Flags are recomputed from the stored I-states and universe states, not
    read from the trace annotations.
    """
    if not len(trace):
        raise ValueError("cannot classify an empty trace")
    plaus, ill = [], []
    for rec in trace:
        s = rec.agents[agent].istate
        p = relations.plausible(s)
        plaus.append(p)
        ill.append(p and not relations.reality(s, rec.omega, correspondence))
    first = next((rec.k for rec, p in zip(trace, plaus) if not p), None)
    return TraceClassification(all(plaus), all(ill), first, tuple(plaus), tuple(ill))


def _pairs(p, q):
    if isinstance(p, ProbIState):
        p = p.pmf
    if isinstance(q, ProbIState):
        q = q.pmf
    if isinstance(p, Mapping):
        keys = set(p) | set(q)
        return [(p.get(k, 0.0), q.get(k, 0.0)) for k in keys]
    if len(p) != len(q):
        raise ValueError("pmf vectors differ in length")
    return list(zip(p, q))


def kl_divergence(p, q) -> float:
    """D(p || q) in nats, with ``0 log(0/q) = 0``.

    ``p`` and ``q`` are both mappings (or ``ProbIState``) or aligned
    sequences.  Raises ``SupportMismatch`` where p has mass and q does not.
    """
    terms = []
    for pi, qi in _pairs(p, q):
        if pi <= 0:
            continue
        if qi <= 0:
            raise SupportMismatch("p assigns mass outside the support of q")
        terms.append(pi * math.log(pi / qi))
    return max(0.0, math.fsum(terms)) if terms else 0.0


def kl_plausible(prediction, posterior, threshold: float) -> bool:
    """Threshold test on D(posterior || prediction).

    Posterior mass outside the prediction's support counts as implausible.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    try:
        return kl_divergence(posterior, prediction) <= threshold
    except SupportMismatch:
        return False


def observation_posterior(agent, y, prior: Optional[Mapping] = None) -> ProbIState:
    """``p(x | y)`` from a single observation and an (uninformative) prior.

    Defaults to the uniform prior over the agent's X-space.
    """
    if prior is None:
        xs = list(agent.x_space)
        prior = {x: 1.0 / len(xs) for x in xs}
    weights = {x: agent.likelihood(y, x) * p for x, p in prior.items()}
    return ProbIState.normalized(weights)
