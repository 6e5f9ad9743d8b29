"""Planar localization from tower signal strengths, and intensity spoofing.

Distances are inferred through the inverse-square law: a tower at
intensity ``r`` and distance ``d`` is received at ``r / d**2`` and the
receiver, calibrated to ``r_c``, reports ``sqrt(r_c / r_received)``, or
``"#"`` when the received level is not below ``r_c``.  The receiver's
I-state is the family of circles the readings describe; it is plausible iff
the circles share a point.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..agents import AgentModel, Correspondence, ExtrinsicWorld
from ..errors import InvalidParams
from ..producer import StationarySetting
from ..relations import RelationSet
from ..simulation import System
from ..spaces import Space
from .params import Param

NO_READING = "#"
DEFAULT_TOWERS = ((0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0), (-4.0, 0.0))


@dataclass(frozen=True)
class TrilaterationWorld:
    """Receiver position, tower positions, transmitted and calibration intensities."""

    receiver: tuple
    towers: tuple
    intensities: tuple
    calibration: tuple

    def __post_init__(self):
        n = len(self.towers)
        if not 1 <= n or len(self.intensities) != n or len(self.calibration) != n:
            raise ValueError("towers, intensities and calibration must have equal nonzero length")
        if any(r <= 0 for r in self.intensities) or any(c <= 0 for c in self.calibration):
            raise ValueError("intensities and calibrations must be positive")
        if any(math.dist(self.receiver, t) == 0 for t in self.towers):
            raise ValueError("the receiver may not sit on a tower")


def received_intensity(r: float, d: float) -> float:
    return r / (d * d)


def observe_distances(position, towers, intensities, calibration) -> tuple:
    out = []
    for t, r, rc in zip(towers, intensities, calibration):
        ro = received_intensity(r, math.dist(position, t))
        out.append(math.sqrt(rc / ro) if rc > ro else NO_READING)
    return tuple(out)


def trilateration_observe(world: TrilaterationWorld) -> tuple:
    """Observed distances, one per tower, with ``"#"`` for out-of-range signals."""
    return observe_distances(world.receiver, world.towers, world.intensities, world.calibration)


def trilateration_spoof_intensity(d_actual: float, d_target: float, r_c: float) -> float:
    """Transmit intensity that makes a tower at ``d_actual`` read as ``d_target``."""
    if d_actual <= 0 or d_target <= 0:
        raise ValueError("distances must be positive")
    return r_c * (d_actual / d_target) ** 2


# -- receiver I-states -------------------------------------------------------

@dataclass(frozen=True)
class CircleIState:
    """Circles of observed radius around known towers (``"#"`` for no reading)."""

    centers: tuple
    radii: tuple

    def canonical_key(self):
        return (self.centers, tuple((1, r) if r != NO_READING else (0, 0) for r in self.radii))


def _close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _pair_points(c0, r0, c1, r1, tol):
    dx, dy = c1[0] - c0[0], c1[1] - c0[1]
    D = math.hypot(dx, dy)
    if D > r0 + r1 and not _close(D, r0 + r1, tol):
        return []
    if D < abs(r0 - r1) and not _close(D, abs(r0 - r1), tol):
        return []
    a = (r0 * r0 - r1 * r1 + D * D) / (2 * D)
    h = math.sqrt(max(0.0, r0 * r0 - a * a))
    mx, my = c0[0] + a * dx / D, c0[1] + a * dy / D
    ox, oy = -dy / D * h, dx / D * h
    return [(mx + ox, my + oy), (mx - ox, my - oy)]


def circles_consistent(centers: Sequence, radii: Sequence, tol: float = 1e-9) -> bool:
    """True iff every circle is defined and all of them pass through a common point."""
    if any(r == NO_READING for r in radii) or any(r <= 0 for r in radii):
        return False
    c0, r0 = centers[0], radii[0]
    other = next((j for j in range(1, len(centers)) if math.dist(centers[j], c0) > 0), None)
    for j in range(1, len(centers)):
        if math.dist(centers[j], c0) == 0 and not _close(radii[j], r0, tol):
            return False
    if other is None:
        return True
    for pt in _pair_points(c0, r0, centers[other], radii[other], tol):
        if all(_close(math.dist(pt, c), r, tol) for c, r in zip(centers, radii)):
            return True
    return False


class TrilaterationRelations(RelationSet):
    """Analytic model relation: ``x`` lies on every observed circle."""

    def __init__(self, x_space, correspondence, tol: float = 1e-9):
        super().__init__(x_space, correspondence)
        self.tol = tol

    def model(self, istate, x) -> bool:
        if any(r == NO_READING for r in istate.radii):
            return False
        return all(_close(math.dist(x, c), r, self.tol) for c, r in zip(istate.centers, istate.radii))

    def plausible(self, istate) -> bool:
        return circles_consistent(istate.centers, istate.radii, self.tol)


# -- scenario --------------------------------------------------------------

PARAMS = {
    "n": Param(1, "int", lo=1, hi=5, doc="number of towers"),
    "towers": Param(DEFAULT_TOWERS, "points", doc="tower positions; the first n are used"),
    "receiver": Param((2.0, 0.0), "floats", doc="true receiver position"),
    "calibration": Param((), "floats", doc="calibration intensities (default 1 each)"),
    "intensities": Param((), "floats", doc="transmitted intensities (default: calibration)"),
    "window": Param(10.0, "float", lo=1.0, hi=1e6),
    "tol": Param(1e-9, "float", lo=0.0, hi=1.0, doc="relative tolerance of the circle tests"),
    "u_lo": Param(0.25, "float", lo=1e-9),
    "u_hi": Param(4.0, "float", lo=1e-9),
    "u_step": Param(0.25, "float", lo=1e-6),
    "sweep_lo": Param(0.5, "float", lo=1e-9),
    "sweep_hi": Param(1.5, "float", lo=1e-9),
    "sweep_points": Param(21, "int", lo=2, hi=401),
}


def _axis(lo, hi, step):
    k = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(k + 1), 12)


def parse_reading(text: str):
    """``"1.5, sqrt(2), #"`` into ``(1.5, 1.41421356..., "#")``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok == NO_READING:
            out.append(NO_READING)
            continue
        m = re.fullmatch(r"sqrt\((.+)\)", tok)
        out.append(math.sqrt(float(m.group(1))) if m else float(tok))
    return tuple(out)


def build(p) -> "Scenario":
    from . import Scenario

    n = p["n"]
    if len(p["towers"]) < n:
        raise InvalidParams(f"need {n} towers, got {len(p['towers'])}", "towers")
    towers = tuple(tuple(t) for t in p["towers"][:n])
    calib = p["calibration"] or (1.0,) * n
    intens = p["intensities"] or calib
    if len(p["receiver"]) != 2:
        raise InvalidParams("receiver needs two coordinates", "receiver")
    if len(calib) != n or len(intens) != n:
        raise InvalidParams("calibration and intensities need one value per tower", "calibration")
    w = p["window"]
    pos = tuple(p["receiver"])
    try:
        TrilaterationWorld(pos, towers, tuple(intens), tuple(calib))
    except ValueError as exc:
        raise InvalidParams(str(exc), "receiver") from None
    if any(abs(v) > w for v in pos + tuple(c for t in towers for c in t)):
        raise InvalidParams("receiver and towers must lie inside the window", "window")

    def in_window(x):
        return isinstance(x, tuple) and len(x) == 2 and all(abs(v) <= w for v in x)

    def valid_reading(y):
        return isinstance(y, tuple) and len(y) == n and all(
            v == NO_READING or (isinstance(v, float) and v > 0) for v in y)

    def valid_omega(o):
        return (isinstance(o, tuple) and len(o) == n + 2 and in_window(o[:2])
                and all(r > 0 for r in o[2:]))

    Xr = Space(contains=in_window, name="Xr")
    Omega = Space(contains=valid_omega, name="Omega")
    Up = Space(contains=lambda u: isinstance(u, tuple) and len(u) == n and all(r > 0 for r in u),
               name="Up")

    def sense(o):
        return observe_distances(o[:2], towers, o[2:], calib)

    def circles(y):
        return CircleIState(towers, y)

    receiver = AgentModel(
        name="receiver", x_space=Xr, u_space=Space((0,), name="Ur"),
        y_space=Space(contains=valid_reading, name="Yr"), i_space_kind="derived",
        itf=lambda s, u, y: circles(y), itf_init=circles, policy=lambda s: 0,
    )
    producer = AgentModel(
        name="producer", x_space=Omega, u_space=Up, y_space=Omega,
        i_space_kind="stage_feedback", policy=lambda k: tuple(intens),
    )
    c_r = Correspondence(alpha=lambda o: o[:2])
    world = ExtrinsicWorld(
        omega=Omega,
        utf=lambda o, us: o[:2] + tuple(us[1]),
        sensors=(sense, lambda o: o),
        correspondences=(c_r, Correspondence(alpha=lambda o: o)),
    )
    rel = TrilaterationRelations(Xr, c_r, p["tol"])
    system = System(world, (receiver, producer), (rel, None), receiver=0, producer=1)
    omega1 = pos + tuple(intens)

    def as_tuple(u):
        return u if isinstance(u, tuple) else (u,)

    axis = _axis(p["u_lo"], p["u_hi"], p["u_step"])
    if len(axis) ** n > 2_000_000:
        raise InvalidParams("producer action grid too large; raise u_step", "u_step")
    setting = StationarySetting(
        u_space=Space.grid([axis] * n, name="Up grid"),
        produce=lambda u: pos + as_tuple(u),
        sense=sense,
        correspondence=c_r,
    )

    def sweep(kind):
        pts = p["sweep_points"]
        if kind == "u":
            ax = np.round(np.linspace(p["sweep_lo"], p["sweep_hi"], pts), 12)
            space = Space.grid([ax] * n, name="intensity sweep")
            return space, lambda u: rel.plausible(circles(sense(pos + as_tuple(u))))
        if kind == "y":
            true = [math.dist(pos, t) for t in towers]
            axes = [np.round(np.linspace(d * p["sweep_lo"], d * p["sweep_hi"], pts), 12) for d in true]
            space = Space.grid(axes, name="distance sweep")
            return space, lambda y: rel.plausible(circles(as_tuple(y)))
        raise InvalidParams(f"unknown margin space {kind!r}; use 'y' or 'u'", "space")

    return Scenario("trilateration", system, omega1, 3, p, stationary=setting, sweep=sweep,
                    parse_observation=parse_reading,
                    extras={"towers": towers, "calibration": tuple(calib), "position": pos})
