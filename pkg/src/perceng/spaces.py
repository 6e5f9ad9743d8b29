"""Finite spaces of opaque elements, with an optional metric."""

from __future__ import annotations

import math
from typing import Any, Callable, Iterable, Iterator, Optional

import numpy as np

from .errors import SpaceNotEnumerable


def canonical_key(value: Any):
    """Total, process-independent sort key for nested opaque identifiers.

    Built-in ``sorted`` fails on mixed types and is only a partial order on
    sets; this key orders numbers, strings, tuples and frozensets the same
    way in every interpreter run (no dependence on hash randomization).
    """
    if value is None:
        return (0,)
    if isinstance(value, bool):
        return (1, int(value))
    if isinstance(value, (int, float, np.integer, np.floating)):
        return (1, value)
    if isinstance(value, str):
        return (2, value)
    if isinstance(value, tuple):
        return (3, tuple(canonical_key(v) for v in value))
    if isinstance(value, (frozenset, set)):
        return (4, tuple(sorted(canonical_key(v) for v in value)))
    key = getattr(value, "canonical_key", None)
    if key is not None:
        return (5, key())
    return (9, repr(value))


def canonical_sorted(values: Iterable[Any]) -> list:
    return sorted(values, key=canonical_key)


def euclidean(a, b) -> float:
    if isinstance(a, tuple):
        return math.dist(a, b)
    return abs(a - b)


class Space:
    """A nonempty finite space, or a membership-only window of a larger one.

    Parameters
    ----------
    elements : iterable, optional
        The elements, in canonical enumeration order.  Duplicates are an error.
    metric : callable, optional
        ``metric(a, b) -> float``.
    contains : callable, optional
        Membership predicate for spaces too large to enumerate (for example,
        gridbot X-spaces over all environments of a large map).  Exactly one
        of ``elements`` and ``contains`` must be given.
    coords : array, optional
        Coordinates of sampled points in R^n, aligned with ``elements``;
        enables vectorized nearest-neighbour margin searches.
    """

    def __init__(self, elements=None, metric=None, contains=None, coords=None, name=""):
        if (elements is None) == (contains is None):
            raise ValueError("give exactly one of elements= or contains=")
        self.name = name
        self.resolution = 0.0
        self.metric: Optional[Callable[[Any, Any], float]] = metric
        self._contains = contains
        self.coords = None
        if elements is not None:
            self.elements = tuple(elements)
            if not self.elements:
                raise ValueError("a space must be nonempty")
            self._index = {e: i for i, e in enumerate(self.elements)}
            if len(self._index) != len(self.elements):
                raise ValueError("space elements must be unique")
            if coords is not None:
                coords = np.asarray(coords, dtype=float)
                if coords.ndim == 1:
                    coords = coords[:, None]
                if coords.shape[0] != len(self.elements):
                    raise ValueError("coords must align with elements")
                self.coords = coords
        else:
            self.elements = None
            self._index = None

    @classmethod
    def integers(cls, lo: int, hi: int, name="") -> "Space":
        """The integer window ``lo..hi`` (inclusive) with metric ``|a - b|``."""
        return cls(range(lo, hi + 1), metric=lambda a, b: abs(a - b), name=name)

    @classmethod
    def grid(cls, axes, name="") -> "Space":
        """Cartesian sample grid in R^n with the Euclidean metric.

        ``axes`` is a sequence of 1-D coordinate arrays.  Elements are tuples
        of floats (a bare float when n == 1).
        """
        axes = [np.asarray(a, dtype=float) for a in axes]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        if len(axes) == 1:
            elements = [float(p[0]) for p in pts]
        else:
            elements = [tuple(float(v) for v in p) for p in pts]
        space = cls(elements, metric=euclidean, coords=pts, name=name)
        steps = [float(np.max(np.diff(a))) for a in axes if len(a) > 1]
        space.resolution = max(steps) if steps else 0.0
        return space

    @property
    def enumerable(self) -> bool:
        return self.elements is not None

    def __contains__(self, item) -> bool:
        if self._index is not None:
            try:
                return item in self._index
            except TypeError:
                return False
        return bool(self._contains(item))

    def __iter__(self) -> Iterator:
        if self.elements is None:
            raise SpaceNotEnumerable(f"space {self.name!r} is membership-only")
        return iter(self.elements)

    def __len__(self) -> int:
        if self.elements is None:
            raise SpaceNotEnumerable(f"space {self.name!r} is membership-only")
        return len(self.elements)

    def index(self, item) -> int:
        return self._index[item]

    def distance(self, a, b) -> float:
        return self.metric(a, b)

    def __repr__(self):
        size = len(self.elements) if self.elements is not None else "?"
        return f"Space({self.name!r}, size={size})"
