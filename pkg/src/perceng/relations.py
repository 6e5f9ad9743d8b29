"""Model relation M (I-states to X-states) and the derived reality relation R."""

from __future__ import annotations

from typing import Callable, Optional

from .agents import AgentModel, Correspondence
from .filters import HistoryIState, NdetIState, ProbIState, ndet_initial, ndet_step

DEFAULT_EPSILON = 1e-6


class RelationSet:
    """Model and reality relations for one agent.

    The default model relation is definitional per I-state family:

    * set-valued I-states: ``(i, x) in M`` iff ``x in i``;
    * pmfs: iff ``pmf(x) >= epsilon`` and ``pmf(x) > 0`` (a threshold
      interpretation; ``epsilon = 0`` means the support);
    * histories: iff ``x`` is in the nondeterministic filter state computed
      from the history with ``agent``'s models;
    * stage counters: every ``x`` (a stage index says nothing about X).

    Scenario code subclasses this for derived I-spaces (grid maps) by
    overriding ``model``, ``members`` and ``plausible``.
    """

    def __init__(self, x_space, correspondence: Optional[Correspondence] = None,
                 epsilon: float = DEFAULT_EPSILON, agent: Optional[AgentModel] = None,
                 model: Optional[Callable] = None):
        self.x_space = x_space
        self.correspondence = correspondence
        self.epsilon = epsilon
        self.agent = agent
        self._model = model

    # -- model relation ----------------------------------------------------

    def _as_ndet(self, istate):
        if isinstance(istate, HistoryIState):
            s = ndet_initial(self.agent, istate.observations[0])
            for u, y in zip(istate.actions, istate.observations[1:]):
                s = ndet_step(s, u, y, self.agent)
            return s
        return istate

    def model(self, istate, x) -> bool:
        if self._model is not None:
            return bool(self._model(istate, x))
        istate = self._as_ndet(istate)
        if isinstance(istate, NdetIState):
            return x in istate.possible
        if isinstance(istate, ProbIState):
            m = istate[x]
            return m > 0 and m >= self.epsilon
        if isinstance(istate, int):
            return x in self.x_space
        raise TypeError(f"no default model relation for {type(istate).__name__}")

    def members(self, istate):
        """Iterate the X-states related to ``istate`` under M."""
        if self._model is None:
            istate = self._as_ndet(istate)
            if isinstance(istate, NdetIState):
                return iter(istate.possible)
            if isinstance(istate, ProbIState):
                return (x for x, p in istate.pmf.items() if p > 0 and p >= self.epsilon)
        return (x for x in self.x_space if self.model(istate, x))

    def plausible(self, istate) -> bool:
        return next(iter(self.members(istate)), _NONE) is not _NONE

    # -- reality relation --------------------------------------------------

    def reality(self, istate, omega, correspondence: Optional[Correspondence] = None) -> bool:
        """``(i, omega) in R`` iff some x has ``(i, x) in M`` and ``(x, omega) in C``."""
        c = correspondence or self.correspondence
        if c is None:
            raise ValueError("reality relation needs a correspondence")
        if c.functional:
            return self.model(istate, c.alpha(omega))
        return any(c.relates(x, omega) for x in self.members(istate))


_NONE = object()


def reality_relates(istate, omega, relations: RelationSet,
                    correspondence: Optional[Correspondence] = None) -> bool:
    return relations.reality(istate, omega, correspondence)
