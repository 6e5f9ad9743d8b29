"""Grid robots: depth sensing, compressed map I-states and exploration.

World tiles are ``(i, j)`` with ``i`` to the east and ``j`` to the north.
Directions are 0 = east, 1 = north, 2 = west, 3 = south; action 0 rotates
counterclockwise, action 1 moves one tile forward unless blocked, and the
optional action 2 waits.  ASCII maps list rows top-down with ``#`` black,
``.`` white and ``R``/``P``/``A``/``B`` marking robot start tiles.

A robot's map lives in its own frame: its start tile is ``(0, 0)`` and its
start heading is direction 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..agents import AgentModel, Correspondence, ExtrinsicWorld
from ..errors import InconsistentSensing, InvalidParams
from ..filters import (
    HistoryIState,
    NdetIState,
    SufficiencyReport,
    check_sufficiency,
    ndet_initial,
    ndet_step,
    reachable_histories,
)
from ..producer import CostModel
from ..relations import RelationSet
from ..simulation import System
from ..spaces import Space
from .params import Param

STEP = ((1, 0), (0, 1), (-1, 0), (0, -1))
ROTATE, FORWARD, WAIT = 0, 1, 2
WHITE, BLACK = "white", "black"
MAX_SIDE = 16
ROBOT_MARKS = "RPAB"


def ahead(i, j, d, n=1):
    di, dj = STEP[d]
    return (i + n * di, j + n * dj)


# -- environments ------------------------------------------------------------

def _neighbors(t):
    i, j = t
    return ((i + 1, j), (i, j + 1), (i - 1, j), (i, j - 1))


def is_connected(tiles) -> bool:
    tiles = set(tiles)
    if not tiles:
        return False
    start = next(iter(tiles))
    seen = {start}
    stack = [start]
    while stack:
        for nb in _neighbors(stack.pop()):
            if nb in tiles and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(tiles)


@dataclass(frozen=True)
class GridEnvironment:
    """A finite, 4-connected set of white tiles; everything else is black."""

    white_tiles: frozenset
    bounds: tuple = field(default=None)

    def __post_init__(self):
        if not self.white_tiles:
            raise ValueError("an environment needs at least one white tile")
        if not is_connected(self.white_tiles):
            raise ValueError("white tiles must be 4-connected")
        xs = [t[0] for t in self.white_tiles]
        ys = [t[1] for t in self.white_tiles]
        box = (min(xs), min(ys), max(xs), max(ys))
        if self.bounds is None:
            object.__setattr__(self, "bounds", box)
        else:
            lo_i, lo_j, hi_i, hi_j = self.bounds
            if box[0] < lo_i or box[1] < lo_j or box[2] > hi_i or box[3] > hi_j:
                raise ValueError("white tiles must lie inside the bounds")

    def __contains__(self, tile):
        return tile in self.white_tiles


def parse_ascii(text: str):
    """Parse an ASCII map into ``(environment, marks)``.

    ``marks`` maps each robot letter to its tile.  Rows are read top-down,
    so row ``r`` of ``h`` rows has ``j = h - 1 - r``.
    """
    rows = [r.rstrip() for r in text.strip("\n").splitlines() if r.strip()]
    if not rows:
        raise InvalidParams("empty map", "map")
    h = len(rows)
    w = max(len(r) for r in rows)
    if h > MAX_SIDE or w > MAX_SIDE:
        raise InvalidParams(f"map is {w}x{h}; at most {MAX_SIDE}x{MAX_SIDE} is supported", "map")
    white, marks = set(), {}
    for r, row in enumerate(rows):
        for c, ch in enumerate(row):
            tile = (c, h - 1 - r)
            if ch == "#" or ch == " ":
                continue
            if ch == ".":
                white.add(tile)
            elif ch in ROBOT_MARKS:
                if ch in marks:
                    raise InvalidParams(f"robot mark {ch!r} appears twice", "map")
                white.add(tile)
                marks[ch] = tile
            else:
                raise InvalidParams(f"unexpected map character {ch!r} at row {r + 1}", "map")
    try:
        env = GridEnvironment(frozenset(white), (0, 0, w - 1, h - 1))
    except ValueError as exc:
        raise InvalidParams(str(exc), "map") from None
    return env, marks


def render_ascii(white: Iterable, black: Iterable = (), bounds=None, unknown="?") -> list:
    """Rows (top-down) with ``.`` white, ``#`` black and ``unknown`` elsewhere."""
    white, black = set(white), set(black)
    tiles = white | black
    if bounds is None:
        xs = [t[0] for t in tiles]
        ys = [t[1] for t in tiles]
        bounds = (min(xs), min(ys), max(xs), max(ys))
    lo_i, lo_j, hi_i, hi_j = bounds
    rows = []
    for j in range(hi_j, lo_j - 1, -1):
        rows.append("".join(
            "." if (i, j) in white else "#" if (i, j) in black else unknown
            for i in range(lo_i, hi_i + 1)))
    return rows


def gridbot_depth(x, blocked=None) -> int:
    """White tiles ahead of pose ``x = (i, j, d, E)`` before the first black one.

    ``blocked`` optionally lists extra occupied tiles that stop the ray.
    """
    i, j, d, env = x
    n = 0
    while True:
        t = ahead(i, j, d, n + 1)
        if t not in env or (blocked and t in blocked):
            return n
        n += 1


def enumerate_environments(max_w: int, max_h: int) -> list:
    """All connected tile sets fitting a ``max_w`` x ``max_h`` box, up to translation.

    Each set is normalized so its minimum coordinates are zero.
    """
    cells = [(i, j) for i in range(max_w) for j in range(max_h)]
    found = set()
    for mask in range(1, 1 << len(cells)):
        tiles = [c for b, c in enumerate(cells) if mask >> b & 1]
        if not is_connected(tiles):
            continue
        mi = min(t[0] for t in tiles)
        mj = min(t[1] for t in tiles)
        found.add(frozenset((a - mi, b - mj) for a, b in tiles))
    return sorted(found, key=lambda e: (len(e), sorted(e)))


def local_environments(envs) -> list:
    """Every placement of each environment with some tile at the origin."""
    out = set()
    for env in envs:
        for ti, tj in env:
            out.add(frozenset((a - ti, b - tj) for a, b in env))
    return sorted(out, key=lambda e: (len(e), sorted(e)))


def pose_step(x, u):
    """Intrinsic single-robot XTF on ``(i, j, d, E)``."""
    i, j, d, env = x
    if u == ROTATE:
        return (i, j, (d + 1) % 4, env)
    if u == FORWARD:
        t = ahead(i, j, d)
        if t in env:
            return (t[0], t[1], d, env)
    return x


# -- map I-states --------------------------------------------------------------

@dataclass(frozen=True)
class GridMapIState:
    """Tile labels recorded so far, the believed pose, and a conflict flag.

    ``labels`` is a sorted tuple of ``(tile, label)`` pairs; unlisted tiles
    are unknown.  A conflicted map marks a label contradiction: no
    environment explains the readings.
    """

    labels: tuple
    pose: tuple = (0, 0, 0)
    conflict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "_lookup", dict(self.labels))

    def label(self, tile) -> Optional[str]:
        return self._lookup.get(tile)

    @property
    def whites(self) -> frozenset:
        return frozenset(t for t, lab in self.labels if lab == WHITE)

    @property
    def blacks(self) -> frozenset:
        return frozenset(t for t, lab in self.labels if lab == BLACK)

    def canonical_key(self):
        return (self.conflict, self.pose, self.labels)

    def ascii(self) -> list:
        return render_ascii(self.whites, self.blacks)

    @classmethod
    def fresh(cls) -> "GridMapIState":
        return cls((((0, 0), WHITE),))


def _record(labels: dict, tile, lab):
    old = labels.get(tile)
    if old is not None and old != lab:
        raise InconsistentSensing(tile, old, lab)
    labels[tile] = lab


def gridmap_update(m: GridMapIState, u, y) -> GridMapIState:
    """Move the believed pose by ``u`` (forward only onto known white), then record ``y``.

    Raises ``InconsistentSensing`` when the reading contradicts a label.
    """
    i, j, d = m.pose
    if u == ROTATE:
        d = (d + 1) % 4
    elif u == FORWARD:
        t = ahead(i, j, d)
        if m.label(t) == WHITE:
            i, j = t
    labels = dict(m.labels)
    for n in range(1, y + 1):
        _record(labels, ahead(i, j, d, n), WHITE)
    _record(labels, ahead(i, j, d, y + 1), BLACK)
    return GridMapIState(tuple(sorted(labels.items())), (i, j, d))


def gridmap_initial(y) -> GridMapIState:
    """Map after the first reading, taken at the origin facing direction 0."""
    m = GridMapIState.fresh()
    labels = dict(m.labels)
    for n in range(1, y + 1):
        _record(labels, (n, 0), WHITE)
    _record(labels, (y + 1, 0), BLACK)
    return GridMapIState(tuple(sorted(labels.items())), (0, 0, 0))


def gridmap_itf(m: GridMapIState, u, y) -> GridMapIState:
    """ITF used in simulation: a contradiction yields the absorbing conflicted map."""
    if m.conflict:
        return m
    try:
        return gridmap_update(m, u, y)
    except InconsistentSensing:
        return GridMapIState(m.labels, m.pose, True)


def map_admits(m: GridMapIState, x) -> bool:
    """Model relation: pose matches and ``E`` agrees with every label."""
    if m.conflict:
        return False
    i, j, d, env = x
    if (i, j, d) != m.pose:
        return False
    return all((t in env) == (lab == WHITE) for t, lab in m.labels)


class GridMapRelations(RelationSet):
    """Map I-states relate to every environment that agrees with their labels.

    Recorded white tiles are always 4-connected (every white run starts at
    a tile the robot stood on), so a map is plausible exactly when it holds
    no contradiction.
    """

    def model(self, istate, x) -> bool:
        return map_admits(istate, x)

    def plausible(self, istate) -> bool:
        return not istate.conflict


def decode_map(m: GridMapIState, x_space) -> frozenset:
    """The X-states a map stands for, by enumeration of ``x_space``."""
    return frozenset(x for x in x_space if map_admits(m, x))


# -- exploration policy ------------------------------------------------------

def _informative(m: GridMapIState, pose) -> bool:
    i, j, d = pose
    n = 1
    while True:
        lab = m.label(ahead(i, j, d, n))
        if lab is None:
            return True
        if lab == BLACK:
            return False
        n += 1


def _believed_step(m: GridMapIState, pose, u):
    i, j, d = pose
    if u == ROTATE:
        return (i, j, (d + 1) % 4)
    t = ahead(i, j, d)
    if m.label(t) == WHITE:
        return (t[0], t[1], d)
    return pose


def explore_action(m: GridMapIState) -> int:
    """First action on a shortest path to a pose whose reading would reveal unknown tiles.

    With nothing left to learn the robot heads back to its start tile and
    rotates there.  A conflicted map also just rotates.
    """
    if m.conflict:
        return ROTATE
    start = m.pose
    parent = {start: None}
    queue = deque([start])
    home = None
    while queue:
        pose = queue.popleft()
        if pose != start and _informative(m, pose):
            return _first_action(parent, pose)
        if home is None and pose[:2] == (0, 0):
            home = pose
        for u in (ROTATE, FORWARD):
            nxt = _believed_step(m, pose, u)
            if nxt not in parent:
                parent[nxt] = (pose, u)
                queue.append(nxt)
    if start[:2] == (0, 0) or home is None:
        return ROTATE
    return _first_action(parent, home)


def _first_action(parent, pose):
    u = None
    while parent[pose] is not None:
        pose, u = parent[pose]
    return u


# -- universe ----------------------------------------------------------------

def world_step(env, poses, actions):
    """Joint move of several robots.

    A robot cannot enter a tile another robot occupies at the start of the
    stage, and when two robots target the same free tile the lower-indexed
    one gets it.
    """
    occupied = {p[:2] for p in poses}
    claimed = set()
    out = []
    for k, ((i, j, d), u) in enumerate(zip(poses, actions)):
        if u == ROTATE:
            out.append((i, j, (d + 1) % 4))
            continue
        if u == FORWARD:
            t = ahead(i, j, d)
            if t in env and t not in occupied and t not in claimed:
                claimed.add(t)
                out.append((t[0], t[1], d))
                continue
        out.append((i, j, d))
    return tuple(out)


def world_depth(env, poses, k) -> int:
    """Reading of robot ``k``: other robots stop the ray like black tiles."""
    i, j, d = poses[k]
    others = {p[:2] for n, p in enumerate(poses) if n != k}
    return gridbot_depth((i, j, d, env), others)


def _to_local(frame, tile):
    (oi, oj, od) = frame
    a, b = tile[0] - oi, tile[1] - oj
    for _ in range(od):
        a, b = b, -a
    return (a, b)


def to_local_state(frame, env, pose):
    """Express a world pose and environment in the frame ``(i0, j0, d0)``."""
    i, j = _to_local(frame, pose[:2])
    local_env = frozenset(_to_local(frame, t) for t in env)
    return (i, j, (pose[2] - frame[2]) % 4, local_env)


def _omega_space(env, n):
    def valid(o):
        if not isinstance(o, tuple) or len(o) != n:
            return False
        tiles = [p[:2] for p in o]
        return all(t in env for t in tiles) and len(set(tiles)) == n and all(p[2] in range(4) for p in o)

    return Space(contains=valid, name="Omega")


def _local_x_space():
    def valid(x):
        if not isinstance(x, tuple) or len(x) != 4:
            return False
        i, j, d, env = x
        return (0, 0) in env and (i, j) in env and d in range(4) and is_connected(env)

    return Space(contains=valid, name="X")


def _explorer(name, actions):
    return AgentModel(
        name=name, x_space=_local_x_space(), u_space=Space(actions, name="U"),
        y_space=Space.integers(0, MAX_SIDE, name="Y"), i_space_kind="derived",
        itf=gridmap_itf, itf_init=gridmap_initial, policy=explore_action,
    )


def _grid_system(env, starts, agents, receiver=0, producer=None, explorers=None):
    n = len(starts)
    frames = tuple(starts)
    explorers = range(n) if explorers is None else explorers
    corrs = tuple(
        Correspondence(alpha=(lambda o, k=k: to_local_state(frames[k], env.white_tiles, o[k])))
        for k in range(n))
    world = ExtrinsicWorld(
        omega=_omega_space(env.white_tiles, n),
        utf=lambda o, us: world_step(env.white_tiles, o, us),
        sensors=tuple((lambda o, k=k: world_depth(env.white_tiles, o, k)) for k in range(n)),
        correspondences=corrs,
    )
    rels = tuple(
        GridMapRelations(agents[k].x_space, corrs[k]) if k in explorers else None for k in range(n))
    return System(world, tuple(agents), rels, receiver=receiver, producer=producer)


def _start(marks, letter, direction, key):
    if letter not in marks:
        raise InvalidParams(f"map has no {letter!r} start tile", key)
    if direction not in range(4):
        raise InvalidParams("directions are 0..3", key)
    return marks[letter] + (direction,)


# -- scenarios ---------------------------------------------------------------

ROOM = """
#####
#...#
#R..#
#...#
#####
"""

GRIDBOT_PARAMS = {
    "map": Param(ROOM, "grid", doc="ASCII map with one R start tile"),
    "direction": Param(0, "int", lo=0, hi=3),
}


def build_gridbot(p) -> "Scenario":
    from . import Scenario

    env, marks = parse_ascii(p["map"])
    start = _start(marks, "R", p["direction"], "direction")
    system = _grid_system(env, (start,), (_explorer("gridbot", (ROTATE, FORWARD)),))
    return Scenario("gridbot", system, (start,), 20, p, extras={"environment": env})


TWO_ROOM = """
#####
#A..#
#...#
#..B#
#####
"""

TWO_GRIDBOTS_PARAMS = {
    "map": Param(TWO_ROOM, "grid", doc="ASCII map with A and B start tiles"),
    "direction_a": Param(0, "int", lo=0, hi=3),
    "direction_b": Param(2, "int", lo=0, hi=3),
}


def build_two_gridbots(p) -> "Scenario":
    from . import Scenario

    env, marks = parse_ascii(p["map"])
    a = _start(marks, "A", p["direction_a"], "direction_a")
    b = _start(marks, "B", p["direction_b"], "direction_b")
    agents = (_explorer("gridbot_a", (ROTATE, FORWARD)), _explorer("gridbot_b", (ROTATE, FORWARD)))
    system = _grid_system(env, (a, b), agents)
    return Scenario("two_gridbots", system, (a, b), 20, p, extras={"environment": env})


DOORWAY = """
###########
#...#.....#
#R..P.....#
#...#.....#
###########
"""

ILLUSION_PARAMS = {
    "map": Param(DOORWAY, "grid", doc="ASCII map with receiver R and producer P"),
    "direction": Param(0, "int", lo=0, hi=3, doc="receiver start heading"),
    "producer_direction": Param(0, "int", lo=0, hi=3),
    "producer": Param("hold", "str", choices=("hold", "depart")),
    "depart_stage": Param(20, "int", lo=1, doc="stage at which a departing producer moves forward"),
}


def build_illusion(p) -> "Scenario":
    """Receiver explores while the producer sits in the doorway (or leaves it)."""
    from . import Scenario

    env, marks = parse_ascii(p["map"])
    r = _start(marks, "R", p["direction"], "direction")
    pr = _start(marks, "P", p["producer_direction"], "producer_direction")
    s = p["depart_stage"]
    if p["producer"] == "hold":
        policy = lambda k: WAIT  # noqa: E731
    else:
        policy = lambda k: FORWARD if k == s else WAIT  # noqa: E731
    producer = AgentModel(
        name="producer", x_space=_omega_space(env.white_tiles, 2),
        u_space=Space((ROTATE, FORWARD, WAIT), name="Up"), y_space=Space.integers(0, MAX_SIDE),
        i_space_kind="stage_feedback", policy=policy,
    )
    receiver = _explorer("receiver", (ROTATE, FORWARD))
    system = _grid_system(env, (r, pr), (receiver, producer), receiver=0, producer=1,
                          explorers=(0,))
    room = _blocked_region(env.white_tiles, r[:2], pr[:2])
    local_room = frozenset(_to_local(r, t) for t in room)

    def shows_room(istate):
        return isinstance(istate, GridMapIState) and istate.whites == local_room

    # waiting is free, any motion costs one unit
    cost = CostModel(stage=lambda w, up, y, i, ur: 0.0 if up == WAIT else 1.0, nonnegative=True)
    return Scenario("gridbot_illusion", system, (r, pr), 40, p,
                    goal_targets={"small_room": shows_room}, plan_cost=cost,
                    parse_observation=int,
                    extras={"environment": env, "room": room, "local_room": local_room})


def _blocked_region(white, start, blocker):
    """Tiles reachable from ``start`` when ``blocker`` is treated as black."""
    seen = {start}
    stack = [start]
    while stack:
        for nb in _neighbors(stack.pop()):
            if nb in white and nb != blocker and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return frozenset(seen)


# -- sufficiency instance ----------------------------------------------------

def sufficiency_instance(max_w: int = 3, max_h: int = 3):
    """Enumerated single-robot models over all small environments.

    Returns ``(ndet_agent, map_agent, x_space)``: the first runs the
    set-valued filter over explicit ``(i, j, d, E)`` states, the second the
    compressed map ITF.  Both start at the origin facing direction 0.
    """
    envs = local_environments(enumerate_environments(max_w, max_h))
    xs = [(i, j, d, e) for e in envs for (i, j) in sorted(e) for d in range(4)]
    X = Space(xs, name="X")
    initial = frozenset((0, 0, 0, e) for e in envs)
    U = Space((ROTATE, FORWARD), name="U")
    Y = Space.integers(0, max(max_w, max_h), name="Y")
    ndet = AgentModel(name="gridbot", x_space=X, u_space=U, y_space=Y, i_space_kind="ndet",
                      xtf=pose_step, sensor=gridbot_depth, initial=initial)
    mapper = AgentModel(name="gridbot", x_space=X, u_space=U, y_space=Y, i_space_kind="derived",
                        xtf=pose_step, sensor=gridbot_depth, initial=initial,
                        itf=gridmap_itf, itf_init=gridmap_initial)
    return ndet, mapper, X


def map_sufficiency(depth: int, max_w: int = 3, max_h: int = 3) -> SufficiencyReport:
    """Check the map ITF against the set-valued filter on every small environment.

    Histories are all those realizable up to ``depth`` actions.  The
    reference filter state is computed incrementally from each history's
    parent, and maps are decoded through a pose index of X.
    """
    ndet, mapper, X = sufficiency_instance(max_w, max_h)
    hs = reachable_histories(ndet, depth)
    ref = {}
    for eta in sorted(hs, key=lambda h: len(h.observations)):
        if not eta.actions:
            ref[eta] = ndet_initial(ndet, eta.observations[0]).possible
        else:
            parent = HistoryIState(eta.actions[:-1], eta.observations[:-1])
            ref[eta] = ndet_step(NdetIState(ref[parent]), eta.actions[-1],
                                 eta.observations[-1], ndet).possible
    by_pose = {}
    for x in X:
        by_pose.setdefault(x[:3], []).append(x)
    def decode(m):
        if m.conflict:
            return frozenset()
        return frozenset(x for x in by_pose.get(m.pose, ()) if map_admits(m, x))

    def kappa(eta):
        m = gridmap_initial(eta.observations[0])
        for u, y in zip(eta.actions, eta.observations[1:]):
            m = gridmap_itf(m, u, y)
        return m

    return check_sufficiency(kappa, hs, derived_itf=gridmap_itf, reference=ref.__getitem__,
                             decode=decode)
