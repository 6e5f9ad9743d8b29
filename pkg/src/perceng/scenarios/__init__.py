"""Configured example worlds: agents, universe, relations and initial state.

Every builder takes a parameter mapping (strings or native values) and
returns a :class:`Scenario`.  Use :func:`instantiate_scenario` to build one
by name and :data:`SCENARIOS` to list them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from ..errors import InvalidParams
from ..simulation import System
from .params import Param, resolve


@dataclass
class Scenario:
    """A fully wired instance.

    ``stationary`` is set for one-shot producer settings; ``sweep`` builds
    ``(space, membership)`` pairs for margin maps; ``goal_targets`` names
    goal payloads that configs can refer to; ``parse_observation`` turns a
    config string into an observation value.
    """

    name: str
    system: System
    omega1: Any
    stages: int
    params: dict
    stationary: Any = None
    sweep: Optional[Callable] = None
    goal_targets: dict = field(default_factory=dict)
    plan_cost: Any = None
    parse_observation: Optional[Callable] = None
    extras: dict = field(default_factory=dict)

    @property
    def world(self):
        return self.system.world

    @property
    def agents(self):
        return self.system.agents

    @property
    def relations(self):
        return self.system.relations

    def as_tuple(self):
        """``(world, agents, relations, omega1)``."""
        return self.world, self.agents, self.relations, self.omega1


def _registry():
    from . import grids, landmark, line, trilateration

    return {
        "intbot": (line.INTBOT_PARAMS, line.build_intbot),
        "linebot": (line.LINEBOT_PARAMS, line.build_linebot),
        "gridbot": (grids.GRIDBOT_PARAMS, grids.build_gridbot),
        "two_gridbots": (grids.TWO_GRIDBOTS_PARAMS, grids.build_two_gridbots),
        "landmark_static": (landmark.STATIC_PARAMS, landmark.build_static),
        "landmark_dynamic": (landmark.DYNAMIC_PARAMS, landmark.build_dynamic),
        "trilateration": (trilateration.PARAMS, trilateration.build),
        "gridbot_illusion": (grids.ILLUSION_PARAMS, grids.build_illusion),
    }


SCENARIOS = (
    "intbot",
    "linebot",
    "gridbot",
    "two_gridbots",
    "landmark_static",
    "landmark_dynamic",
    "trilateration",
    "gridbot_illusion",
)


def scenario_params(name: str) -> Mapping[str, Param]:
    reg = _registry()
    if name not in reg:
        raise InvalidParams(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}", "name")
    return reg[name][0]


def instantiate_scenario(name: str, params: Optional[Mapping] = None) -> Scenario:
    """Build scenario ``name`` with ``params`` over its defaults."""
    specs = scenario_params(name)
    values = resolve(specs, params, name)
    return _registry()[name][1](values)


__all__ = ["Scenario", "SCENARIOS", "instantiate_scenario", "scenario_params", "Param"]
