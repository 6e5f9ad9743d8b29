"""Plausible observation sets and the two margins around them.

Plausibility robustness (PR) is the radius of the largest open ball around a
point that stays inside the plausible set P; forced-fusion magnitude (FFM)
is the radius of the largest open ball that stays outside it.  On a finite
or sampled space both reduce to the distance to the nearest point of the
opposite class, which is a realized distance and the supremum of admissible
radii.  Exactly one of the two is nonzero; an empty opposite class gives
``inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import MetricMissing
from .filters import initial_istate

INF = math.inf


@dataclass(frozen=True)
class MarginResult:
    pr: float
    ffm: float
    in_plausible_set: bool
    resolution: float = 0.0


def plausible_observation_set(receiver, relations, observations: Optional[Iterable] = None) -> frozenset:
    """Observations whose stage-1 receiver I-state (built from the preimage) is plausible."""
    ys = receiver.y_space if observations is None else observations
    return frozenset(y for y in ys if relations.plausible(initial_istate(receiver, y)))


def _nearest_opposite(center, inside: bool, space, member: Callable) -> float:
    best = INF
    for other in space:
        if member(other) != inside:
            d = space.metric(center, other)
            if d < best:
                best = d
    return best


def margin_at(center, space, member: Callable) -> MarginResult:
    """PR/FFM of ``center`` against the P-membership test on a metric space."""
    if space.metric is None:
        raise MetricMissing(f"space {space.name!r} has no metric")
    inside = bool(member(center))
    d = _nearest_opposite(center, inside, space, member)
    if inside:
        return MarginResult(d, 0.0, True, space.resolution)
    return MarginResult(0.0, d, False, space.resolution)


def _p_membership(receiver, relations, plausible):
    if plausible is not None:
        return plausible
    P = plausible_observation_set(receiver, relations)
    return P.__contains__


def margins_y(y, receiver, relations=None, plausible: Optional[Callable] = None) -> MarginResult:
    """Margins of observation ``y`` in the receiver's observation space.

    ``plausible`` overrides the enumerated P with a membership test, for
    sampled continuous spaces whose P has an analytic description.
    """
    if receiver.y_space.metric is None:
        raise MetricMissing(f"{receiver.name}: observation space has no metric")
    return margin_at(y, receiver.y_space, _p_membership(receiver, relations, plausible))


def margins_u(u, setting, receiver, relations=None, plausible: Optional[Callable] = None) -> MarginResult:
    """Margins of producer action ``u``; membership is ``sense(produce(u')) in P``."""
    if setting.u_space.metric is None:
        raise MetricMissing("producer action space has no metric")
    in_p = _p_membership(receiver, relations, plausible)

    def member(v):
        return in_p(setting.sense(setting.produce(v)))

    return margin_at(u, setting.u_space, member)


def margin_field(space, member: Callable) -> list:
    """Margins at every point of a space, in enumeration order.

    Sampled Euclidean spaces use a KD-tree nearest-neighbour query into the
    opposite class; other spaces fall back to pairwise distances.
    """
    if space.metric is None:
        raise MetricMissing(f"space {space.name!r} has no metric")
    pts = list(space)
    flags = np.array([bool(member(p)) for p in pts])
    res = space.resolution
    if space.coords is None:
        return [margin_at(p, space, member) for p in pts]
    dist = np.full(len(pts), INF)
    for cls in (True, False):
        targets = space.coords[flags != cls]
        sources = np.flatnonzero(flags == cls)
        if len(targets) and len(sources):
            d, _ = cKDTree(targets).query(space.coords[sources])
            dist[sources] = d
    return [
        MarginResult(float(d), 0.0, True, res) if f else MarginResult(0.0, float(d), False, res)
        for d, f in zip(dist, flags)
    ]
