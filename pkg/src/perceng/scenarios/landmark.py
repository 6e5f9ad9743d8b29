"""A receiver that localizes against a landmark the producer can move.

The universe state is ``(x1, x2)``: the receiver position and the landmark
position.  The world reports ``x2 - x1`` while the receiver believes its
sensor reads its own position.  Both agree exactly when ``x2 = 2 * x1``,
so a landmark at ``2 * x1 + offset`` makes the receiver perceive
``x1 + offset``.
"""

from __future__ import annotations

from ..agents import AgentModel, Correspondence, ExtrinsicWorld
from ..errors import InvalidParams
from ..filters import NdetIState
from ..producer import StationarySetting
from ..relations import RelationSet
from ..simulation import System
from ..spaces import Space
from .common import observation_sweep
from .params import Param


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def landmark_reading(omega) -> int:
    """Signed distance from the receiver to the landmark."""
    x1, x2 = omega
    return x2 - x1


def truthful_landmark(x1: int) -> int:
    return 2 * x1


def _spaces(w):
    xr = Space.integers(-w, w, name="Xr")
    omega = Space([(a, b) for a in range(-w, w + 1) for b in range(-3 * w, 3 * w + 1)], name="Omega")
    yr = Space.integers(-4 * w, 4 * w, name="Yr")
    return xr, omega, yr


STATIC_PARAMS = {
    "x1": Param(0, "int", doc="receiver position"),
    "offset": Param(3, "int", doc="landmark displacement from its truthful position"),
    "shift_stage": Param(1, "int", lo=1, doc="first stage at which the landmark is displaced"),
    "window": Param(10, "int", lo=1, hi=200),
}


def build_static(p) -> "Scenario":
    from . import Scenario

    w, x1, off = p["window"], p["x1"], p["offset"]
    Xr, Omega, Yr = _spaces(w)
    if x1 not in Xr:
        raise InvalidParams(f"x1={x1} outside the window", "x1")
    if not -3 * w <= truthful_landmark(x1) + off <= 3 * w:
        raise InvalidParams(f"offset={off} moves the landmark outside the window", "offset")
    Up = Space.integers(-3 * w, 3 * w, name="Up")
    shifted = truthful_landmark(x1) + off

    def place(k):
        # action at stage k sets the landmark seen at stage k + 1
        return shifted if k + 1 >= p["shift_stage"] else truthful_landmark(x1)

    receiver = AgentModel(
        name="receiver", x_space=Xr, u_space=Space((0,), name="Ur"), y_space=Yr,
        i_space_kind="sensor_feedback", xtf=lambda x, u: x, sensor=lambda x: x,
        policy=lambda s: 0,
    )
    producer = AgentModel(
        name="producer", x_space=Omega, u_space=Up, y_space=Omega,
        i_space_kind="stage_feedback", policy=place,
    )
    c_r = Correspondence(alpha=lambda o: o[0])
    world = ExtrinsicWorld(
        omega=Omega,
        utf=lambda o, us: (o[0] + us[0], us[1]),
        sensors=(landmark_reading, lambda o: o),
        correspondences=(c_r, Correspondence(alpha=lambda o: o)),
    )
    rel = RelationSet(Xr, c_r, agent=receiver)
    system = System(world, (receiver, producer), (rel, None), receiver=0, producer=1)
    omega1 = (x1, shifted if p["shift_stage"] <= 1 else truthful_landmark(x1))
    setting = StationarySetting(u_space=Up, produce=lambda u: (x1, u), sense=landmark_reading,
                                correspondence=c_r)
    return Scenario("landmark_static", system, omega1, 6, p, stationary=setting,
                    sweep=observation_sweep(receiver, rel, setting), parse_observation=int)


DYNAMIC_PARAMS = {
    "xr1": Param(0, "int", doc="initial receiver position"),
    "xp1": Param(0, "int", doc="initial landmark position"),
    "window": Param(10, "int", lo=2, hi=200),
    "receiver_motion": Param("exact", "str", choices=("exact", "any"),
                             doc="receiver's motion model: x + u, or any position"),
    "ispace": Param("ndet", "str", choices=("ndet", "sensor_feedback", "history")),
    "receiver_policy": Param("stay", "str", choices=("stay", "stabilize")),
    "slip": Param(False, "bool", doc="the receiver's true motion may slip by one unit"),
    "producer": Param("sequence", "str", choices=("sequence", "track")),
    "producer_actions": Param((1,), "ints", doc="landmark moves at stages 1, 2, ...; then 0"),
    "target": Param(3, "int", doc="reading the tracking producer maintains"),
}


def build_dynamic(p) -> "Scenario":
    from . import Scenario

    w = p["window"]
    Xr, Omega, Yr = _spaces(w)
    omega1 = (p["xr1"], p["xp1"])
    if omega1 not in Omega:
        raise InvalidParams(f"initial state {omega1} outside the window", "xr1")
    U = Space((-1, 0, 1), metric=lambda a, b: abs(a - b), name="U")
    if any(a not in U for a in p["producer_actions"]):
        raise InvalidParams("producer actions must be -1, 0 or 1", "producer_actions")

    def r_policy(istate):
        if p["receiver_policy"] == "stay":
            return 0
        if isinstance(istate, NdetIState) and len(istate.possible) == 1:
            (x,) = istate.possible
            return -_sign(x)
        return 0

    motion = {"xtf": lambda x, u: x + u} if p["receiver_motion"] == "exact" else {
        "xtf_set": lambda x, u: Xr.elements}
    receiver = AgentModel(
        name="receiver", x_space=Xr, u_space=U, y_space=Yr, i_space_kind=p["ispace"],
        sensor=lambda x: x, policy=r_policy, **motion,
    )

    seq = p["producer_actions"]
    target = p["target"]
    if p["producer"] == "sequence":
        producer = AgentModel(
            name="producer", x_space=Omega, u_space=U, y_space=Omega, i_space_kind="stage_feedback",
            policy=lambda k: seq[k - 1] if k - 1 < len(seq) else 0,
        )
    else:
        producer = AgentModel(
            name="producer", x_space=Omega, u_space=U, y_space=Omega, i_space_kind="state_feedback",
            omniscient=True, policy=lambda view: track_policy(view.omega, target),
        )

    def move(o, us):
        return (o[0] + us[0], o[1] + us[1])

    c_r = Correspondence(alpha=lambda o: o[0])
    common = dict(omega=Omega, sensors=(landmark_reading, lambda o: o),
                  correspondences=(c_r, Correspondence(alpha=lambda o: o)))
    if p["slip"]:
        def slip(o, us):
            base = move(o, us)
            out = frozenset(s for s in ((base[0] + d, base[1]) for d in (-1, 0, 1)) if s in Omega)
            return out or frozenset((base,))

        world = ExtrinsicWorld(utf_set=slip, **common)
    else:
        world = ExtrinsicWorld(utf=move, **common)
    rel = RelationSet(Xr, c_r, agent=receiver)
    system = System(world, (receiver, producer), (rel, None), receiver=0, producer=1)
    return Scenario("landmark_dynamic", system, omega1, 6, p, parse_observation=int,
                    sweep=observation_sweep(receiver, rel),
                    extras={"track": lambda o: track_policy(o, target)})


def track_policy(omega, target: int) -> int:
    """Move the landmark one unit toward keeping the reading at ``target``."""
    return _sign(target - landmark_reading(omega))

