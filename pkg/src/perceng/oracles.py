"""Brute-force reference computations and random instance generators.

The references work on dense tables, independently of the filter code:

* ``T[u, x, x']`` transition table (boolean for set-valued models, row
  stochastic for pmf models) and ``O[x, y]`` sensing table;
* the set-valued reference propagates a boolean vector through matrix
  products, or enumerates every state path for tiny instances;
* the Bayes reference sums the full joint over state paths.

``run_selfcheck`` compares the library filters against these references
and backs ``pf selfcheck``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .agents import AgentModel, Correspondence, ExtrinsicWorld
from .filters import HistoryIState, NdetIState, filter_history
from .relations import RelationSet
from .simulation import Resolver, System, simulate
from .spaces import Space

FULL_JOINT_LIMIT = 2_000_000


@dataclass(frozen=True)
class TableInstance:
    """A finite agent given by tables; ``prob`` selects pmf semantics."""

    T: np.ndarray
    O: np.ndarray
    prior: Optional[np.ndarray] = None
    prob: bool = False

    @property
    def nx(self) -> int:
        return self.O.shape[0]

    @property
    def nu(self) -> int:
        return self.T.shape[0]

    @property
    def ny(self) -> int:
        return self.O.shape[1]

    def agent(self, i_space_kind: Optional[str] = None, policy=None) -> AgentModel:
        """The same instance as an :class:`AgentModel` over integer states."""
        X = Space(range(self.nx), name="X")
        U = Space(range(self.nu), name="U")
        Y = Space(range(self.ny), name="Y")
        if self.prob:
            trans = [[{int(j): float(self.T[u, x, j]) for j in np.flatnonzero(self.T[u, x])}
                      for x in range(self.nx)] for u in range(self.nu)]
            sens = [{int(y): float(self.O[x, y]) for y in np.flatnonzero(self.O[x])}
                    for x in range(self.nx)]
            prior = {x: float(p) for x, p in enumerate(self.prior) if p > 0}
            return AgentModel(
                name="table", x_space=X, u_space=U, y_space=Y, i_space_kind=i_space_kind or "prob",
                xtf_pmf=lambda x, u: trans[u][x], sensor_pmf=lambda x: sens[x],
                prior=prior, policy=policy,
            )
        succ = [[frozenset(int(j) for j in np.flatnonzero(self.T[u, x])) for x in range(self.nx)]
                for u in range(self.nu)]
        obs = [frozenset(int(y) for y in np.flatnonzero(self.O[x])) for x in range(self.nx)]
        return AgentModel(
            name="table", x_space=X, u_space=U, y_space=Y, i_space_kind=i_space_kind or "ndet",
            xtf_set=lambda x, u: succ[u][x], sensor_set=lambda x: obs[x], policy=policy,
        )


def random_ndet_instance(rng: np.random.Generator, nx: int, nu: int, ny: int,
                         max_succ: int = 3, max_obs: int = 2) -> TableInstance:
    """Every (x, u) has 1..max_succ successors, every x 1..max_obs observations."""
    T = np.zeros((nu, nx, nx), dtype=bool)
    for u in range(nu):
        for x in range(nx):
            k = rng.integers(1, max_succ + 1)
            T[u, x, rng.choice(nx, size=min(k, nx), replace=False)] = True
    O = np.zeros((nx, ny), dtype=bool)
    for x in range(nx):
        k = rng.integers(1, max_obs + 1)
        O[x, rng.choice(ny, size=min(k, ny), replace=False)] = True
    return TableInstance(T, O)


def _sparse_rows(rng, rows, cols, max_nnz):
    out = np.zeros((rows, cols))
    for r in range(rows):
        k = min(int(rng.integers(1, max_nnz + 1)), cols)
        idx = rng.choice(cols, size=k, replace=False)
        w = rng.random(k) + 0.05
        out[r, idx] = w / w.sum()
    return out


def random_prob_instance(rng: np.random.Generator, nx: int, nu: int, ny: int,
                         max_succ: int = 4, max_obs: int = 3) -> TableInstance:
    T = np.stack([_sparse_rows(rng, nx, nx, max_succ) for _ in range(nu)])
    O = _sparse_rows(rng, nx, ny, max_obs)
    prior = rng.random(nx) + 0.01
    return TableInstance(T, O, prior / prior.sum(), prob=True)


def sample_history(rng: np.random.Generator, inst: TableInstance, stages: int) -> HistoryIState:
    """History generated by a state path of the instance itself (nonzero evidence)."""
    if inst.prob:
        x = int(rng.choice(inst.nx, p=inst.prior))
    else:
        x = int(rng.integers(inst.nx))
    us, ys = [], []
    for k in range(stages):
        if k:
            u = int(rng.integers(inst.nu))
            row = inst.T[u, x]
            x = int(rng.choice(inst.nx, p=row)) if inst.prob else int(rng.choice(np.flatnonzero(row)))
            us.append(u)
        orow = inst.O[x]
        ys.append(int(rng.choice(inst.ny, p=orow)) if inst.prob else int(rng.choice(np.flatnonzero(orow))))
    return HistoryIState(tuple(us), tuple(ys))


def random_history(rng: np.random.Generator, inst: TableInstance, stages: int) -> HistoryIState:
    """Uniformly random actions and observations (may be inconsistent)."""
    us = tuple(int(u) for u in rng.integers(inst.nu, size=stages - 1))
    ys = tuple(int(y) for y in rng.integers(inst.ny, size=stages))
    return HistoryIState(us, ys)


# -- references --------------------------------------------------------------

def ndet_reference(inst: TableInstance, eta: HistoryIState) -> frozenset:
    """States reachable along some path consistent with every observation."""
    v = inst.O[:, eta.observations[0]].copy()
    for u, y in zip(eta.actions, eta.observations[1:]):
        reach = (v.astype(np.int64) @ inst.T[u].astype(np.int64)) > 0
        v = reach & inst.O[:, y]
    return frozenset(int(x) for x in np.flatnonzero(v))


def ndet_paths(inst: TableInstance, eta: HistoryIState) -> frozenset:
    """Final states of every full state path that explains the history."""
    K = len(eta.observations)
    out = set()
    for path in itertools.product(range(inst.nx), repeat=K):
        if not all(inst.O[x, y] for x, y in zip(path, eta.observations)):
            continue
        if all(inst.T[u, a, b] for u, a, b in zip(eta.actions, path, path[1:])):
            out.add(path[-1])
    return frozenset(out)


def bayes_reference(inst: TableInstance, eta: HistoryIState) -> Optional[np.ndarray]:
    """Posterior over the final state by summing the joint over all paths.

    Small instances build the whole joint tensor; larger ones contract the
    same product with ``einsum``.  Returns None for zero evidence.
    """
    K = len(eta.observations)
    factors = [inst.prior * inst.O[:, eta.observations[0]]]
    mats = [inst.T[u] * inst.O[:, y][None, :] for u, y in zip(eta.actions, eta.observations[1:])]
    if K == 1:
        post = factors[0]
    elif inst.nx ** K <= FULL_JOINT_LIMIT:
        joint = factors[0].reshape((inst.nx,) + (1,) * (K - 1))
        for k, m in enumerate(mats):
            shape = [1] * K
            shape[k], shape[k + 1] = inst.nx, inst.nx
            joint = joint * m.reshape(shape)
        post = joint.reshape(-1, inst.nx).sum(axis=0)
    else:
        letters = "abcdefghijklmnopqrstuvwxyz"
        terms = [letters[0]] + [letters[k] + letters[k + 1] for k in range(K - 1)]
        expr = ",".join(terms) + "->" + letters[K - 1]
        post = np.einsum(expr, factors[0], *mats, optimize="greedy")
    z = math.fsum(post)
    if z <= 0:
        return None
    return post / z


def total_variation(p: np.ndarray, pmf) -> float:
    q = np.zeros_like(p)
    for x, m in pmf.items():
        q[x] = m
    return 0.5 * float(np.abs(p - q).sum())


# -- truthful worlds -------------------------------------------------------

def _cycle_policy(nu):
    def policy(istate):
        if isinstance(istate, NdetIState):
            n = len(istate.possible)
        elif isinstance(istate, HistoryIState):
            n = len(istate.observations)
        else:
            n = len(istate.pmf)
        return n % nu
    return policy


def random_truthful_world(rng: np.random.Generator, kind: str, nx: int = 6, copies: int = 3,
                          nu: int = 2, ny: int = 4):
    """A world whose sensing is ``h o alpha`` and whose motion stays within ``F``.

    Universe states are ``(x, j)`` pairs with ``alpha`` the first
    coordinate.  ``kind`` is ``ndet``, ``history`` or ``prob``; the
    probabilistic receiver uses ``epsilon = 0``.  Returns ``(system, omega1)``.
    """
    Omega = Space([(x, j) for x in range(nx) for j in range(copies)], name="Omega")
    alpha = Correspondence(alpha=lambda w: w[0])
    if kind == "prob":
        inst = random_prob_instance(rng, nx, nu, ny)
        agent = inst.agent("prob", policy=_cycle_policy(nu))
        split = rng.random((nx, copies)) + 0.1
        split /= split.sum(axis=1, keepdims=True)

        def utf_pmf(w, us):
            out = {}
            for x2, p in agent.xtf_pmf(w[0], us[0]).items():
                for j in range(copies):
                    out[(x2, j)] = p * float(split[x2, j])
            return out

        world = ExtrinsicWorld(Omega, utf_pmf=utf_pmf,
                               sensors_pmf=(lambda w: agent.sensor_pmf(w[0]),),
                               correspondences=(alpha,))
        rel = RelationSet(agent.x_space, alpha, epsilon=0.0, agent=agent)
        x1 = int(rng.choice(nx, p=inst.prior))
    else:
        inst = random_ndet_instance(rng, nx, nu, ny)
        agent = inst.agent(kind, policy=_cycle_policy(nu))
        keep = {}
        for w in Omega:
            for u in range(nu):
                succ = [(x2, j) for x2 in sorted(agent.xtf_set(w[0], u)) for j in range(copies)]
                mask = rng.random(len(succ)) < 0.6
                mask[rng.integers(len(succ))] = True
                keep[(w, u)] = frozenset(s for s, m in zip(succ, mask) if m)
        world = ExtrinsicWorld(Omega, utf_set=lambda w, us: keep[(w, us[0])],
                               sensors_set=(lambda w: agent.sensor_set(w[0]),),
                               correspondences=(alpha,))
        rel = RelationSet(agent.x_space, alpha, agent=agent)
        x1 = int(rng.integers(nx))
    omega1 = (x1, int(rng.integers(copies)))
    return System(world, (agent,), (rel,), receiver=0), omega1


# -- self check ------------------------------------------------------------

def check_ndet(rng, rounds: int, max_nx: int = 300, max_stages: int = 6) -> tuple:
    bad = 0
    for _ in range(rounds):
        inst = random_ndet_instance(rng, int(rng.integers(2, max_nx + 1)), int(rng.integers(1, 4)),
                                    int(rng.integers(2, 12)))
        agent = inst.agent()
        K = int(rng.integers(1, max_stages + 1))
        eta = sample_history(rng, inst, K) if rng.random() < 0.8 else random_history(rng, inst, K)
        bad += filter_history(agent, eta).possible != ndet_reference(inst, eta)
    return rounds, bad


def check_ndet_paths(rng, rounds: int) -> tuple:
    bad = 0
    for _ in range(rounds):
        inst = random_ndet_instance(rng, int(rng.integers(2, 6)), 2, 3)
        K = int(rng.integers(1, 5))
        eta = sample_history(rng, inst, K) if rng.random() < 0.7 else random_history(rng, inst, K)
        bad += filter_history(inst.agent(), eta).possible != ndet_paths(inst, eta)
    return rounds, bad


def check_bayes(rng, rounds: int, max_nx: int = 200, max_stages: int = 4, tol: float = 1e-9) -> tuple:
    bad = 0
    for _ in range(rounds):
        inst = random_prob_instance(rng, int(rng.integers(2, max_nx + 1)), int(rng.integers(1, 4)),
                                    int(rng.integers(2, 10)))
        eta = sample_history(rng, inst, int(rng.integers(1, max_stages + 1)))
        ref = bayes_reference(inst, eta)
        post = filter_history(inst.agent(), eta)
        if ref is None or total_variation(ref, post.pmf) > tol:
            bad += 1
    return rounds, bad


def check_truthful(rng, rounds: int, stages: int = 8) -> tuple:
    bad = 0
    kinds = ("ndet", "history", "prob")
    for n in range(rounds):
        system, omega1 = random_truthful_world(rng, kinds[n % 3])
        trace = simulate(system, omega1, stages, Resolver(int(rng.integers(2**31))))
        bad += any(r.agents[0].illusion or not r.agents[0].plausible for r in trace)
    return rounds, bad


def run_selfcheck(seed: int = 0, rounds: int = 20) -> list:
    """``(name, instances, mismatches)`` for each filter/oracle comparison."""
    rng = np.random.default_rng(seed)
    checks = (
        ("ndet filter vs reachability", check_ndet),
        ("ndet filter vs path enumeration", check_ndet_paths),
        ("bayes filter vs joint enumeration", check_bayes),
        ("truthful worlds show no illusion", check_truthful),
    )
    out = []
    for name, fn in checks:
        n, bad = fn(rng, rounds)
        out.append((name, n, bad))
    return out
