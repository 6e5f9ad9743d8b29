"""Agent 8-tuples, the extrinsic world, and correspondence relations.

Every mapping comes in up to three determinism modes: a plain function
(``xtf``/``sensor``), a set-valued nondeterministic variant (``*_set``) and a
pmf-valued probabilistic variant (``*_pmf``).  An agent or world carries
exactly one mode per mapping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Mapping, Optional, Sequence

from .errors import PolicyUndefined
from .spaces import Space

ISPACE_KINDS = (
    "history",
    "ndet",
    "prob",
    "sensor_feedback",
    "stage_feedback",
    "state_feedback",
    "derived",
)


def _one_mode(label, det, ndet, prob, required=True):
    given = [m for m, v in (("det", det), ("ndet", ndet), ("prob", prob)) if v is not None]
    if len(given) > 1:
        raise ValueError(f"{label}: exactly one determinism mode allowed, got {given}")
    if required and not given:
        raise ValueError(f"{label}: no mapping given")
    return given[0] if given else None


def preimage(sensor, y, x_space: Space, set_valued: bool = False) -> frozenset:
    """All X-states that could have produced observation ``y``.

    With ``set_valued`` the sensor is a nondeterministic ``H`` and the result
    is ``{x | y in H(x)}``; otherwise ``{x | h(x) == y}``.
    """
    if set_valued:
        return frozenset(x for x in x_space if y in sensor(x))
    return frozenset(x for x in x_space if sensor(x) == y)


@dataclass(frozen=True)
class AgentModel:
    """One agent: spaces, intrinsic models, I-space family and policy.

    ``policy`` maps an I-state to an action; it may be a callable or a
    mapping.  ``initial`` optionally restricts the stage-1 X-states before the
    first preimage is taken (defaults to all of X).  For ``derived`` I-spaces
    the scenario supplies ``itf(istate, u, y)`` and ``itf_init(y)``.
    An ``omniscient`` agent is handed an ``OmniscientView`` of the whole
    system in place of an I-state.
    """

    name: str
    x_space: Space
    u_space: Space
    y_space: Space
    i_space_kind: str = "ndet"
    xtf: Optional[Callable] = None
    xtf_set: Optional[Callable] = None
    xtf_pmf: Optional[Callable] = None
    sensor: Optional[Callable] = None
    sensor_set: Optional[Callable] = None
    sensor_pmf: Optional[Callable] = None
    policy: Any = None
    prior: Optional[Mapping] = None
    initial: Optional[frozenset] = None
    itf: Optional[Callable] = None
    itf_init: Optional[Callable] = None
    omniscient: bool = False

    def __post_init__(self):
        if self.i_space_kind not in ISPACE_KINDS:
            raise ValueError(f"unknown I-space kind {self.i_space_kind!r}")
        model_free = self.i_space_kind in ("stage_feedback",) or self.omniscient
        xmode = _one_mode(f"{self.name}.xtf", self.xtf, self.xtf_set, self.xtf_pmf,
                          required=not model_free and self.i_space_kind != "derived")
        hmode = _one_mode(f"{self.name}.sensor", self.sensor, self.sensor_set, self.sensor_pmf,
                          required=not model_free and self.i_space_kind != "derived")
        if self.i_space_kind == "prob":
            if "ndet" in (xmode, hmode):
                raise ValueError("probabilistic filter needs deterministic or pmf models")
            if self.prior is None:
                raise ValueError("probabilistic filter needs a prior")
        if self.i_space_kind in ("ndet", "state_feedback", "sensor_feedback", "history"):
            if "prob" in (xmode, hmode):
                raise ValueError("set-valued filters need deterministic or set-valued models")
        if self.i_space_kind == "derived" and (self.itf is None or self.itf_init is None):
            raise ValueError("derived I-space needs itf and itf_init")

    # -- intrinsic mappings, mode-independent views -------------------------

    def successors(self, x, u) -> frozenset:
        if self.xtf is not None:
            return frozenset((self.xtf(x, u),))
        if self.xtf_set is not None:
            return frozenset(self.xtf_set(x, u))
        return frozenset(x2 for x2, p in self.xtf_pmf(x, u).items() if p > 0)

    def transition_pmf(self, x, u) -> Mapping:
        if self.xtf_pmf is not None:
            return self.xtf_pmf(x, u)
        if self.xtf is not None:
            return {self.xtf(x, u): 1.0}
        raise ValueError(f"{self.name} has no probabilistic transition model")

    def observations(self, x) -> frozenset:
        if self.sensor is not None:
            return frozenset((self.sensor(x),))
        if self.sensor_set is not None:
            return frozenset(self.sensor_set(x))
        return frozenset(y for y, p in self.sensor_pmf(x).items() if p > 0)

    def consistent(self, x, y) -> bool:
        """True iff ``y`` is a possible observation from ``x``."""
        if self.sensor is not None:
            return self.sensor(x) == y
        if self.sensor_set is not None:
            return y in self.sensor_set(x)
        return self.sensor_pmf(x).get(y, 0.0) > 0

    def likelihood(self, y, x) -> float:
        if self.sensor_pmf is not None:
            return float(self.sensor_pmf(x).get(y, 0.0))
        if self.sensor is not None:
            return 1.0 if self.sensor(x) == y else 0.0
        raise ValueError(f"{self.name} has no probabilistic sensor model")

    def preimage(self, y) -> frozenset:
        if self.sensor is not None:
            return preimage(self.sensor, y, self.x_space)
        if self.sensor_set is not None:
            return preimage(self.sensor_set, y, self.x_space, set_valued=True)
        return frozenset(x for x in self.x_space if self.likelihood(y, x) > 0)

    def act(self, istate):
        """Apply the policy, raising ``PolicyUndefined`` where it has no value."""
        pol = self.policy
        if pol is None:
            raise PolicyUndefined(f"{self.name} has no policy")
        try:
            u = pol[istate] if isinstance(pol, Mapping) else pol(istate)
        except (KeyError, LookupError) as exc:
            raise PolicyUndefined(f"{self.name}: no action for I-state {istate!r}") from exc
        if u is None:
            raise PolicyUndefined(f"{self.name}: no action for I-state {istate!r}")
        if self.u_space.enumerable and u not in self.u_space:
            raise PolicyUndefined(f"{self.name}: policy returned {u!r} outside U")
        return u

    def with_policy(self, policy, i_space_kind=None, omniscient=None) -> "AgentModel":
        changes = {"policy": policy}
        if i_space_kind is not None:
            changes["i_space_kind"] = i_space_kind
        if omniscient is not None:
            changes["omniscient"] = omniscient
        return replace(self, **changes)

    def validate(self) -> list:
        """Totality check by enumeration; returns a list of problems."""
        problems = []
        for x in self.x_space:
            for u in self.u_space:
                if self.xtf is not None or self.xtf_set is not None or self.xtf_pmf is not None:
                    succ = self.successors(x, u)
                    if not succ:
                        problems.append(f"no successor for ({x!r}, {u!r})")
            if self.sensor is not None or self.sensor_set is not None or self.sensor_pmf is not None:
                if not self.observations(x):
                    problems.append(f"no observation for {x!r}")
        return problems


@dataclass(frozen=True)
class Correspondence:
    """Relation C between X-states and universe states.

    With only ``alpha`` given, C is the graph of alpha (one-to-many and
    onto).  A general ``relation(x, omega)`` may be given instead or as
    well.
    """

    alpha: Optional[Callable] = None
    relation: Optional[Callable] = None

    def __post_init__(self):
        if self.alpha is None and self.relation is None:
            raise ValueError("correspondence needs alpha or relation")

    @property
    def functional(self) -> bool:
        return self.relation is None

    def relates(self, x, omega) -> bool:
        if self.relation is not None:
            return bool(self.relation(x, omega))
        return x == self.alpha(omega)

    def check_alpha(self, omega_space: Space) -> list:
        """Universe states where ``(alpha(w), w)`` is not in C."""
        if self.alpha is None:
            return []
        return [w for w in omega_space if not self.relates(self.alpha(w), w)]


@dataclass(frozen=True)
class ExtrinsicWorld:
    """Universe space, UTF and per-agent universe sensor mappings.

    ``utf`` takes ``(omega, actions)`` with ``actions`` a tuple holding one
    action per agent.  Sensor families are tuples indexed by agent.
    """

    omega: Space
    utf: Optional[Callable] = None
    utf_set: Optional[Callable] = None
    utf_pmf: Optional[Callable] = None
    sensors: Optional[Sequence[Callable]] = None
    sensors_set: Optional[Sequence[Callable]] = None
    sensors_pmf: Optional[Sequence[Callable]] = None
    correspondences: Sequence[Optional[Correspondence]] = ()

    def __post_init__(self):
        _one_mode("utf", self.utf, self.utf_set, self.utf_pmf)
        _one_mode("universe sensors", self.sensors, self.sensors_set, self.sensors_pmf)

    @property
    def deterministic(self) -> bool:
        return self.utf is not None and self.sensors is not None

    @property
    def n_agents(self) -> int:
        fam = self.sensors or self.sensors_set or self.sensors_pmf
        return len(fam)

    def successors(self, omega, actions) -> frozenset:
        if self.utf is not None:
            return frozenset((self.utf(omega, actions),))
        if self.utf_set is not None:
            return frozenset(self.utf_set(omega, actions))
        return frozenset(w for w, p in self.utf_pmf(omega, actions).items() if p > 0)

    def transition_pmf(self, omega, actions) -> Mapping:
        if self.utf_pmf is not None:
            return self.utf_pmf(omega, actions)
        if self.utf is not None:
            return {self.utf(omega, actions): 1.0}
        raise ValueError("world has no probabilistic transition model")

    def observations(self, i: int, omega) -> frozenset:
        if self.sensors is not None:
            return frozenset((self.sensors[i](omega),))
        if self.sensors_set is not None:
            return frozenset(self.sensors_set[i](omega))
        return frozenset(y for y, p in self.sensors_pmf[i](omega).items() if p > 0)

    def observation_pmf(self, i: int, omega) -> Mapping:
        if self.sensors_pmf is not None:
            return self.sensors_pmf[i](omega)
        if self.sensors is not None:
            return {self.sensors[i](omega): 1.0}
        raise ValueError("world has no probabilistic sensor model")

    def correspondence(self, i: int) -> Optional[Correspondence]:
        if i < len(self.correspondences):
            return self.correspondences[i]
        return None

    def check_correspondences(self) -> dict:
        """Enumerative check of ``(alpha(w), w) in C`` for every agent."""
        out = {}
        for i, c in enumerate(self.correspondences):
            if c is not None:
                out[i] = c.check_alpha(self.omega)
        return out
