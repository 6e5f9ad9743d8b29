"""Helpers shared by scenario builders."""

from __future__ import annotations

from ..errors import InvalidParams, MetricMissing
from ..metrics import plausible_observation_set


def observation_sweep(receiver, relations, setting=None):
    """Margin-map builder over the receiver's enumerated observations (and producer actions).

    Returns ``sweep(kind)`` giving ``(space, membership)`` for ``kind`` in
    ``{"y", "u"}``; P is enumerated once, on first use.
    """
    cache = {}

    def plausible_set():
        if "P" not in cache:
            cache["P"] = plausible_observation_set(receiver, relations)
        return cache["P"]

    def sweep(kind):
        if kind == "y":
            P = plausible_set()
            return receiver.y_space, P.__contains__
        if kind == "u":
            if setting is None:
                raise MetricMissing("this scenario has no producer action space")
            P = plausible_set()
            return setting.u_space, lambda u: setting.sense(setting.produce(u)) in P
        raise InvalidParams(f"unknown margin space {kind!r}; use 'y' or 'u'", "space")

    return sweep
