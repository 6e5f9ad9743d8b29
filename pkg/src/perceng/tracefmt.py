"""Line-delimited JSON traces: one object per stage, stable byte for byte.

Values are encoded structurally: tuples become lists, frozensets become
``{"set": [...]}`` in canonical order, and I-states carry a one-key tag
(``ndet``, ``prob``, ``history``, ``stage``, ``map``, ``circles``,
``omniscient``).  Probability masses keep 12 significant digits.
"""

from __future__ import annotations

import json
from typing import IO, Iterable, Optional

from .filters import HistoryIState, NdetIState, ProbIState
from .scenarios.grids import BLACK, WHITE, GridMapIState, render_ascii
from .scenarios.trilateration import CircleIState
from .simulation import AgentStage, OmniscientView, StageRecord, Trace
from .spaces import canonical_sorted


def _mass(p: float) -> float:
    return float(format(p, ".12g"))


def encode_value(v):
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, tuple) or isinstance(v, list):
        return [encode_value(e) for e in v]
    if isinstance(v, (frozenset, set)):
        return {"set": [encode_value(e) for e in canonical_sorted(v)]}
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"cannot encode {type(v).__name__} in a trace")


def decode_value(v):
    if isinstance(v, list):
        return tuple(decode_value(e) for e in v)
    if isinstance(v, dict):
        if set(v) == {"set"}:
            return frozenset(decode_value(e) for e in v["set"])
        raise ValueError(f"unexpected object in trace value: {v!r}")
    return v


def istate_digest(s):
    """JSON-ready digest of an I-state that :func:`decode_istate` can invert."""
    if isinstance(s, NdetIState):
        return {"ndet": [encode_value(x) for x in canonical_sorted(s.possible)]}
    if isinstance(s, ProbIState):
        return {"prob": [[encode_value(x), _mass(s.pmf[x])] for x in canonical_sorted(s.pmf)]}
    if isinstance(s, HistoryIState):
        return {"history": {"u": encode_value(s.actions), "y": encode_value(s.observations)}}
    if isinstance(s, GridMapIState):
        tiles = [t for t, _ in s.labels]
        lo_i = min(t[0] for t in tiles)
        hi_j = max(t[1] for t in tiles)
        return {"map": {"rows": render_ascii(s.whites, s.blacks), "origin": [lo_i, hi_j],
                        "pose": list(s.pose), "conflict": s.conflict}}
    if isinstance(s, CircleIState):
        return {"circles": {"centers": encode_value(s.centers), "radii": encode_value(s.radii)}}
    if isinstance(s, OmniscientView):
        return {"omniscient": True}
    if isinstance(s, bool):
        raise TypeError("booleans are not I-states")
    if isinstance(s, int):
        return {"stage": s}
    if s is None:
        return None
    raise TypeError(f"no digest for I-state type {type(s).__name__}")


def decode_istate(d):
    if d is None:
        return None
    (tag, body), = d.items()
    if tag == "ndet":
        return NdetIState(frozenset(decode_value(x) for x in body))
    if tag == "prob":
        return ProbIState({decode_value(x): p for x, p in body}) if body else ProbIState.implausible()
    if tag == "history":
        return HistoryIState(decode_value(body["u"]), decode_value(body["y"]))
    if tag == "stage":
        return body
    if tag == "map":
        lo_i, hi_j = body["origin"]
        labels = []
        for r, row in enumerate(body["rows"]):
            for c, ch in enumerate(row):
                if ch in ".#":
                    labels.append(((lo_i + c, hi_j - r), WHITE if ch == "." else BLACK))
        return GridMapIState(tuple(sorted(labels)), tuple(body["pose"]), body["conflict"])
    if tag == "circles":
        return CircleIState(decode_value(body["centers"]), decode_value(body["radii"]))
    if tag == "omniscient":
        return None
    raise ValueError(f"unknown I-state tag {tag!r}")


def record_to_json(rec: StageRecord, names) -> dict:
    return {
        "k": rec.k,
        "omega": encode_value(rec.omega),
        "agents": [
            {"name": n, "u": encode_value(a.u), "y": encode_value(a.y),
             "istate_digest": istate_digest(a.istate),
             "plausible": a.plausible, "illusion": a.illusion}
            for n, a in zip(names, rec.agents)
        ],
    }


def dumps_trace(trace: Trace) -> str:
    lines = [json.dumps(record_to_json(r, trace.names), sort_keys=True, separators=(",", ":"))
             for r in trace]
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, fh: IO[str]):
    fh.write(dumps_trace(trace))


def read_trace(lines: Iterable[str]) -> Trace:
    """Rebuild a :class:`Trace` (with decoded I-states) from JSONL lines."""
    trace = Trace()
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj["k"] != len(trace.records) + 1:
            raise ValueError(f"line {n}: stage {obj['k']} out of sequence")
        agents = tuple(
            AgentStage(decode_value(a["u"]), decode_value(a["y"]), decode_istate(a["istate_digest"]),
                       a["plausible"], a["illusion"])
            for a in obj["agents"])
        trace.records.append(StageRecord(obj["k"], decode_value(obj["omega"]), agents))
        trace.names = tuple(a["name"] for a in obj["agents"])
    return trace


def revalidate(trace: Trace, relations) -> list:
    """Recompute every stored annotation; return ``(k, agent, field, stored, fresh)`` mismatches."""
    from .simulation import annotate

    bad = []
    for rec in trace:
        for i, a in enumerate(rec.agents):
            rel = relations[i] if i < len(relations) else None
            if a.istate is None:
                fresh = (None, None)
            else:
                fresh = annotate(rel, a.istate, rec.omega)
            for name, stored, new in (("plausible", a.plausible, fresh[0]),
                                      ("illusion", a.illusion, fresh[1])):
                if stored != new:
                    bad.append((rec.k, i, name, stored, new))
    return bad


def summarize(trace: Trace, relations, receiver: int) -> dict:
    """Experience-level flags for the receiver."""
    from .plausibility import classify_trace

    rel = relations[receiver] if receiver < len(relations) else None
    out = {"stages": len(trace), "receiver": trace.names[receiver] if trace.names else receiver}
    if rel is None:
        return out
    c = classify_trace(trace, rel, receiver) if rel.correspondence is not None else None
    plaus = [r.agents[receiver].plausible for r in trace]
    out["plausible_experience"] = all(plaus)
    out["first_implausible_stage"] = next((r.k for r, p in zip(trace, plaus) if not p), None)
    if c is not None:
        out["illusory_experience"] = c.illusory_experience
    return out


def load_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return read_trace(fh)


def save_trace(trace: Trace, path: Optional[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_trace(trace, fh)
