"""Typed scenario parameters with defaults and range checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from ..errors import InvalidParams

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class Param:
    """One parameter: default, kind and optional bounds.

    Kinds: ``int``, ``float``, ``str``, ``bool``, ``ints``, ``floats``
    (comma separated), ``points`` (``x,y; x,y; ...``) and ``grid`` (an
    ASCII block).
    """

    default: Any
    kind: str = "int"
    lo: Optional[float] = None
    hi: Optional[float] = None
    choices: Optional[Sequence] = None
    doc: str = ""


def _convert(key, kind, value):
    if kind == "grid":
        if not isinstance(value, str):
            raise InvalidParams(f"{key}: expected an ASCII grid", key)
        return value.strip("\n")
    if not isinstance(value, str):
        if kind in ("ints", "floats", "points") and isinstance(value, (list, tuple)):
            cast = int if kind == "ints" else float
            if kind == "points":
                return tuple((float(a), float(b)) for a, b in value)
            return tuple(cast(v) for v in value)
        if kind == "int" and isinstance(value, bool):
            raise InvalidParams(f"{key}: expected an integer", key)
        if kind == "int" and isinstance(value, int):
            return value
        if kind == "float" and isinstance(value, (int, float)):
            return float(value)
        if kind == "bool" and isinstance(value, bool):
            return value
        if kind == "str":
            return str(value)
        raise InvalidParams(f"{key}: cannot use {value!r} as {kind}", key)
    text = value.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "str":
            return text
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind == "ints":
            return tuple(int(v) for v in text.split(",") if v.strip())
        if kind == "floats":
            return tuple(float(v) for v in text.split(",") if v.strip())
        if kind == "points":
            pts = []
            for chunk in text.split(";"):
                if chunk.strip():
                    a, b = chunk.split(",")
                    pts.append((float(a), float(b)))
            return tuple(pts)
    except ValueError:
        raise InvalidParams(f"{key}: cannot parse {value!r} as {kind}", key) from None
    raise InvalidParams(f"{key}: unknown parameter kind {kind}", key)


def resolve(specs: Mapping[str, Param], given: Optional[Mapping] = None, scenario: str = "") -> dict:
    """Merge ``given`` over defaults, converting and range-checking each value."""
    given = dict(given or {})
    unknown = sorted(set(given) - set(specs))
    if unknown:
        raise InvalidParams(f"{scenario}: unknown parameter(s) {', '.join(unknown)}; "
                            f"known: {', '.join(sorted(specs))}", unknown[0])
    out = {}
    for key, spec in specs.items():
        value = _convert(key, spec.kind, given[key]) if key in given else spec.default
        if spec.choices is not None and value not in spec.choices:
            raise InvalidParams(f"{key}: {value!r} not one of {list(spec.choices)}", key)
        if spec.kind in ("int", "float"):
            if spec.lo is not None and value < spec.lo:
                raise InvalidParams(f"{key}: {value} below minimum {spec.lo}", key)
            if spec.hi is not None and value > spec.hi:
                raise InvalidParams(f"{key}: {value} above maximum {spec.hi}", key)
        out[key] = value
    return out
