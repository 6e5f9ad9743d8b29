"""Integer and discretized real-line robots."""

from __future__ import annotations

from ..agents import AgentModel, Correspondence, ExtrinsicWorld
from ..errors import InvalidParams
from ..filters import HistoryIState, NdetIState, ProbIState
from ..relations import DEFAULT_EPSILON, RelationSet
from ..simulation import System
from ..spaces import Space
from .common import observation_sweep
from .params import Param

INTBOT_PARAMS = {
    "x1": Param(5, "int", doc="initial position"),
    "window": Param(20, "int", lo=1, hi=10_000, doc="positions are limited to -window..window"),
    "ispace": Param("state_feedback", "str", choices=("state_feedback", "history", "prob")),
}


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _point_estimate(istate):
    if isinstance(istate, NdetIState):
        if len(istate.possible) != 1:
            return None
        (x,) = istate.possible
        return x
    if isinstance(istate, HistoryIState):
        return istate.observations[-1]
    if isinstance(istate, ProbIState):
        support = istate.support()
        if len(support) != 1:
            return None
        (x,) = support
        return x
    return None


def _stabilize(istate):
    x = _point_estimate(istate)
    return None if x is None else -_sign(x)


def build_intbot(p) -> "Scenario":
    from . import Scenario

    w, x1 = p["window"], p["x1"]
    if abs(x1) > w:
        raise InvalidParams(f"x1={x1} lies outside the window -{w}..{w}", "x1")
    X = Space.integers(-w, w, name="X")
    U = Space((-1, 0, 1), metric=lambda a, b: abs(a - b), name="U")
    kind = p["ispace"]
    agent = AgentModel(
        name="intbot", x_space=X, u_space=U, y_space=X, i_space_kind=kind,
        xtf=lambda x, u: x + u, sensor=lambda x: x, policy=_stabilize,
        prior={x: 1.0 / len(X) for x in X} if kind == "prob" else None,
    )
    identity = Correspondence(alpha=lambda w_: w_)
    world = ExtrinsicWorld(omega=X, utf=lambda w_, us: w_ + us[0], sensors=(lambda w_: w_,),
                           correspondences=(identity,))
    rel = RelationSet(X, identity, agent=agent)
    system = System(world, (agent,), (rel,), receiver=0)
    return Scenario("intbot", system, x1, abs(x1) + 4, p, sweep=observation_sweep(agent, rel),
                    parse_observation=int)


# -- linebot ---------------------------------------------------------------

TICKS = 4                                 # grid ticks per unit length
THETA = (-2, -1, 0, 1, 2)                 # motion disturbance in [-1/2, 1/2]
PSI = (-4, -2, 0, 2, 4)                   # sensing disturbance in [-1, 1]

LINEBOT_PARAMS = {
    "x1": Param(2.0, "float", doc="initial position (multiple of 1/4)"),
    "window": Param(3, "int", lo=1, hi=200, doc="positions limited to [-window, window]"),
    "mode": Param("ndet", "str", choices=("ndet", "prob")),
    "spoof": Param(0.0, "float", doc="offset added by the world to every reading (multiple of 1/4)"),
    "policy": Param("stabilize", "str", choices=("stabilize", "stay")),
    "epsilon": Param(DEFAULT_EPSILON, "float", lo=0.0, hi=1.0),
}


def _ticks(key, value) -> int:
    t = value * TICKS
    if abs(t - round(t)) > 1e-9:
        raise InvalidParams(f"{key}={value} is not a multiple of 1/{TICKS}", key)
    return int(round(t))


def _estimate_center(istate):
    if isinstance(istate, NdetIState):
        if not istate.possible:
            return None
        return (min(istate.possible) + max(istate.possible)) / 2
    if isinstance(istate, ProbIState):
        if not istate.pmf:
            return None
        return sum(x * q for x, q in istate.pmf.items())
    return None


def _line_stabilize(istate):
    c = _estimate_center(istate)
    if c is None:
        return 0
    return 0 if abs(c) < TICKS / 2 else -_sign(c)


def _uniform_restricted(values, space):
    inside = [v for v in values if v in space]
    if not inside:
        return {}
    return {v: 1.0 / len(inside) for v in inside}


def build_linebot(p) -> "Scenario":
    """Positions, actions and readings are integers counting quarter units."""
    from . import Scenario

    w = p["window"] * TICKS
    x1 = _ticks("x1", p["x1"])
    spoof = _ticks("spoof", p["spoof"])
    if abs(x1) > w:
        raise InvalidParams(f"x1={p['x1']} lies outside the window", "x1")
    X = Space.integers(-w, w, name="X")
    span = w + max(PSI) + abs(spoof)
    Y = Space.integers(-span, span, name="Y")
    U = Space((-1, 0, 1), metric=lambda a, b: abs(a - b), name="U")
    policy = _line_stabilize if p["policy"] == "stabilize" else (lambda s: 0)

    if p["mode"] == "ndet":
        agent = AgentModel(
            name="linebot", x_space=X, u_space=U, y_space=Y, i_space_kind="ndet",
            xtf_set=lambda x, u: frozenset(x + TICKS * u + t for t in THETA),
            sensor_set=lambda x: frozenset(x + s for s in PSI),
            policy=policy,
        )
        world = ExtrinsicWorld(
            omega=X,
            utf_set=lambda o, us: frozenset(v for v in (o + TICKS * us[0] + t for t in THETA) if v in X),
            sensors_set=(lambda o: frozenset(o + s + spoof for s in PSI),),
            correspondences=(Correspondence(alpha=lambda o: o),),
        )
    else:
        def xtf_pmf(x, u):
            return _uniform_restricted([x + TICKS * u + t for t in THETA], X)

        def sensor_pmf(x):
            return {x + s: 1.0 / len(PSI) for s in PSI}

        agent = AgentModel(
            name="linebot", x_space=X, u_space=U, y_space=Y, i_space_kind="prob",
            xtf_pmf=xtf_pmf, sensor_pmf=sensor_pmf, policy=policy,
            prior={x: 1.0 / len(X) for x in X},
        )
        world = ExtrinsicWorld(
            omega=X,
            utf_pmf=lambda o, us: xtf_pmf(o, us[0]),
            sensors_pmf=(lambda o: {o + s + spoof: 1.0 / len(PSI) for s in PSI},),
            correspondences=(Correspondence(alpha=lambda o: o),),
        )
    rel = RelationSet(X, world.correspondence(0), epsilon=p["epsilon"], agent=agent)
    system = System(world, (agent,), (rel,), receiver=0)
    return Scenario("linebot", system, x1, 6, p, sweep=observation_sweep(agent, rel),
                    parse_observation=int, extras={"ticks": TICKS, "spoof_ticks": spoof})
