"""Exact CTMC computations for the contact process on tiny graphs.

States are infected subsets encoded as bitmasks over ``n <= 12`` vertices.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.stats import poisson

from .graph import Multigraph

MAX_VERTICES = 12


def _mask(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << int(v)
    return m


@dataclass
class StateSpace:
    n: int
    lam: float
    pairs: list[tuple[int, int, int]]  # (u, v, multiplicity), u != v

    @classmethod
    def build(cls, g: Multigraph, lam: float, max_vertices: int = MAX_VERTICES) -> "StateSpace":
        if g.n > max_vertices:
            raise ValueError(f"{g.n} vertices exceeds the exact-oracle limit of {max_vertices}")
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        pairs = [(u, v, m) for (u, v), m in sorted(g.edges.items()) if u != v]
        return cls(g.n, float(lam), pairs)

    @property
    def size(self) -> int:
        return 1 << self.n

    @cached_property
    def generator(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for s in range(self.size):
            out = 0.0
            for v in range(self.n):
                if s >> v & 1:
                    rows.append(s)
                    cols.append(s & ~(1 << v))
                    vals.append(1.0)
                    out += 1.0
            if self.lam > 0:
                gain = {}
                for u, v, m in self.pairs:
                    iu, iv = s >> u & 1, s >> v & 1
                    if iu != iv:
                        w = v if iu else u
                        gain[w] = gain.get(w, 0.0) + self.lam * m
                for w, rate in gain.items():
                    rows.append(s)
                    cols.append(s | (1 << w))
                    vals.append(rate)
                    out += rate
            rows.append(s)
            cols.append(s)
            vals.append(-out)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))


def exact_extinction_expectation(g: Multigraph, lam: float, initial) -> float:
    """E[tau_empty] from ``initial`` by solving the absorption-time system."""
    space = StateSpace.build(g, lam)
    s0 = _mask(initial)
    if s0 == 0:
        return 0.0
    Q = space.generator.tocsc()[1:, 1:]
    m = spla.spsolve(Q, -np.ones(space.size - 1))
    return float(m[s0 - 1])


def exact_marginal(g: Multigraph, lam: float, t: float, initial, tol: float = 1e-12) -> np.ndarray:
    """Distribution over the ``2**n`` states at time ``t`` by uniformization."""
    if t < 0:
        raise ValueError("time must be non-negative")
    space = StateSpace.build(g, lam)
    p = np.zeros(space.size)
    p[_mask(initial)] = 1.0
    if t == 0:
        return p
    Q = space.generator
    rate = float(-Q.diagonal().min())
    if rate == 0:
        return p
    P = (sp.identity(space.size, format="csr") + Q / rate).T.tocsr()
    mu = rate * t
    K = int(poisson.isf(tol, mu)) + 1
    weights = poisson.pmf(np.arange(K + 1), mu)
    out = weights[0] * p
    term = p
    for k in range(1, K + 1):
        term = P @ term
        out += weights[k] * term
    return out


def hit_probability(g: Multigraph, lam: float, t: float, A, B) -> float:
    """P(xi_t^A meets B)."""
    dist = exact_marginal(g, lam, t, A)
    bmask = _mask(B)
    states = np.arange(len(dist))
    return float(dist[(states & bmask) != 0].sum())


def infected_count_distribution(g: Multigraph, lam: float, t: float, initial) -> np.ndarray:
    dist = exact_marginal(g, lam, t, initial)
    sizes = np.array([bin(s).count("1") for s in range(len(dist))])
    return np.bincount(sizes, weights=dist, minlength=g.n + 1)


def exact_first_reinfection(g: Multigraph, lam: float, marked: int = 0) -> tuple[float, float]:
    """``(P(I_1 < inf), E[I_1 | I_1 < inf])`` started from ``{marked}``.

    The chain is augmented with a flag recording whether ``marked`` has
    recovered; ``I_1`` is the first return of ``marked`` once the flag is set.
    """
    space = StateSpace.build(g, lam)
    Q = space.generator.tocoo()
    bit = 1 << marked
    size = space.size
    # augmented index: (flag, state); flag 1 means marked has been healthy
    def idx(flag, s):
        return flag * size + s

    target = 2 * size
    rows, cols, vals = [], [], []
    for s, s2, q in zip(Q.row.tolist(), Q.col.tolist(), Q.data.tolist()):
        if s == s2:
            continue
        for flag in (0, 1):
            if flag == 0 and not s & bit:
                continue  # unreachable
            if flag == 1 and s & bit:
                continue  # marked infected with flag set means we already hit
            nflag = flag
            if not s2 & bit:
                nflag = 1
            if flag == 1 and s2 & bit:
                rows.append(idx(flag, s))
                cols.append(target)
            else:
                rows.append(idx(flag, s))
                cols.append(idx(nflag, s2))
            vals.append(q)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(2 * size + 1, 2 * size + 1))
    out_rate = np.asarray(M.sum(axis=1)).ravel()
    transient = np.flatnonzero(out_rate > 0)
    pos = {int(x): i for i, x in enumerate(transient)}
    A = (M[transient][:, transient] - sp.diags(out_rate[transient])).tocsc()
    b_hit = -np.asarray(M[transient][:, [target]].todense()).ravel()
    h = spla.spsolve(A, b_hit)
    g_t = spla.spsolve(A, -h)
    i0 = pos[idx(0, bit)]
    p_hit = float(h[i0])
    return p_hit, float(g_t[i0] / p_hit) if p_hit > 0 else math.inf


def write_marginal_csv(path: str | Path, dist: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state_mask", "probability"])
        for s, p in enumerate(dist.tolist()):
            w.writerow([s, repr(p)])
