"""Contact process on the lazily grown d-regular tree and the severed tree.

Nodes are integer ids; node 0 is the root ``o``.  A node's children are
allocated (contiguously) the first time it is infected, which is also the
first time they can be exposed to infection.  In the full tree the root has
``d`` children; in the severed tree it has one, and every other node has
``d - 1`` children plus its parent.

Events use thinning at rate ``|xi| (1 + lam d)``: pick a uniform infected
node, then either recover it or fire one of ``d`` slots (slots beyond the
node's degree are null).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from ._seeding import replica_seeds
from .engine import ProcessParams

DEFAULT_BUDGET = 10_000_000

# node columns
PAR, CB, INF, HIST, HN, POS = 0, 1, 2, 3, 4, 5
NCOL = 6


class BudgetExceeded(RuntimeError):
    """Raised when a lazy tree would grow past its node budget."""


TreeAddress = tuple  # child indices from the root; () is o


@dataclass
class TreeInfectionState:
    d: int
    severed: bool
    current: set
    history: set
    time: float = 0.0


@dataclass
class TreeRun:
    grid: np.ndarray
    xi: np.ndarray
    history: np.ndarray
    pioneers: np.ndarray
    root_infected: np.ndarray
    alive: bool
    extinction_time: float
    root_reinfections: int
    state: TreeInfectionState | None = None

    def csv_rows(self, replica: int):
        for i, t in enumerate(self.grid.tolist()):
            yield (replica, t, int(self.xi[i]), int(self.history[i]), int(self.pioneers[i]),
                   int(self.xi[i] > 0))


# ----------------------------------------------------------------------------
# address-level helpers (exact, used for small sets and cross-checks)

def tree_neighbours(a: TreeAddress, d: int, severed: bool = False) -> list[TreeAddress]:
    if len(a) == 0:
        return [(j,) for j in range(1 if severed else d)]
    return [a[:-1]] + [a + (j,) for j in range(d - 1)]


def boundary(nodes: set, d: int, severed: bool = False) -> set:
    """Inner boundary: members with at least one neighbour outside the set."""
    return {v for v in nodes if any(w not in nodes for w in tree_neighbours(v, d, severed))}


def pioneers(state: TreeInfectionState) -> set:
    return boundary(state.history, state.d, state.severed) & state.current


def _first_step(s: TreeAddress, x: TreeAddress) -> TreeAddress:
    """Neighbour of ``s`` on the path from ``s`` to ``x != s``."""
    if len(x) > len(s) and x[: len(s)] == s:
        return x[: len(s) + 1]
    return s[:-1]


def free_branches(subset: Iterable[TreeAddress], d: int) -> int:
    """Edges from ``subset`` into branches of T_d that avoid ``subset``."""
    S = set(subset)
    if not S:
        raise ValueError("subset must be non-empty")
    total = 0
    for s in S:
        blocked = {_first_step(s, x) for x in S if x != s}
        total += d - len(blocked)
    return total


def ball_addresses(d: int, r: int) -> list[TreeAddress]:
    out = [()]
    frontier = [()]
    for _ in range(r):
        nxt = []
        for a in frontier:
            nxt.extend(a + (j,) for j in range(d if len(a) == 0 else d - 1))
        out.extend(nxt)
        frontier = nxt
    return out


def connected_subsets(nodes: Sequence[TreeAddress], d: int) -> Iterable[frozenset]:
    """All connected subsets of a finite subtree, each yielded once."""
    node_set = set(nodes)
    children = {a: [a + (j,) for j in range(d if len(a) == 0 else d - 1) if a + (j,) in node_set]
                for a in nodes}

    def rooted(a):
        # connected subsets whose shallowest vertex is a
        out = [frozenset([a])]
        for c in children[a]:
            sub = rooted(c)
            out = out + [x | y for x in out for y in sub]
        return out

    for a in nodes:
        yield from rooted(a)


# ----------------------------------------------------------------------------
# kernels

@njit(cache=True)
def _deg(v, d, severed):
    if v == 0:
        return 1 if severed else d
    return d


@njit(cache=True)
def _nchild(v, d, severed):
    if v == 0:
        return 1 if severed else d
    return d - 1


@njit(cache=True)
def _nbr(nodes, v, s):
    if v == 0:
        return nodes[0, CB] + s
    if s == 0:
        return nodes[v, PAR]
    return nodes[v, CB] + s - 1


@njit(cache=True)
def _grow2(a, need):
    cap = a.shape[0]
    while cap < need:
        cap *= 2
    b = np.empty((cap, a.shape[1]), dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow1(a, need):
    cap = a.shape[0]
    while cap < need:
        cap *= 2
    b = np.empty(cap, dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _new_nodes(cap):
    nodes = np.empty((cap, NCOL), dtype=np.int64)
    nodes[0, PAR] = -1
    nodes[0, CB] = -1
    nodes[0, INF] = 0
    nodes[0, HIST] = 0
    nodes[0, HN] = 0
    nodes[0, POS] = -1
    return nodes


@njit(cache=True)
def _tree_kernel(d, lam, severed, horizon, grid, seed, budget, stop_when_large):
    """Single contact process from {o}.

    Returns (counts[G, 4] = xi, history, pioneers, root infected;
    extinction time; status; root reinfections; nodes; node count).
    status: 0 ok, 1 budget exceeded, 2 stopped early because |xi| reached
    ``stop_when_large`` (0 disables).
    """
    np.random.seed(seed)
    nodes = _new_nodes(256)
    inf = np.empty(256, dtype=np.int64)
    n_nodes = 1
    n_inf = 0
    n_hist = 0
    n_pion = 0
    unit = 1.0 + lam * d
    G = len(grid)
    counts = np.full((G, 4), -1, dtype=np.int64)
    gi = 0
    t = 0.0
    ext = np.inf
    status = 0
    reinf = 0
    w = 0  # node to infect; the root first
    first = True
    while True:
        if w >= 0:
            # ---- infect w
            if first:
                first = False
            elif w == 0:
                reinf += 1
            if n_inf == inf.shape[0]:
                inf = _grow1(inf, n_inf + 1)
            nodes[w, INF] = 1
            nodes[w, POS] = n_inf
            inf[n_inf] = w
            n_inf += 1
            if nodes[w, HIST] == 0:
                nc = _nchild(w, d, severed)
                if n_nodes + nc > budget:
                    status = 1
                    break
                if n_nodes + nc > nodes.shape[0]:
                    nodes = _grow2(nodes, n_nodes + nc)
                cb = n_nodes
                nodes[w, CB] = cb
                for j in range(nc):
                    c = cb + j
                    nodes[c, PAR] = w
                    nodes[c, CB] = -1
                    nodes[c, INF] = 0
                    nodes[c, HIST] = 0
                    nodes[c, HN] = 0
                    nodes[c, POS] = -1
                n_nodes += nc
                nodes[w, HIST] = 1
                n_hist += 1
                hn = 0
                for s in range(_deg(w, d, severed)):
                    u = _nbr(nodes, w, s)
                    nodes[u, HN] += 1
                    if nodes[u, HIST] == 1:
                        hn += 1
                        if nodes[u, INF] == 1 and nodes[u, HN] == _deg(u, d, severed):
                            n_pion -= 1
                nodes[w, HN] = hn
            if nodes[w, HN] < _deg(w, d, severed):
                n_pion += 1
            w = -1
            if stop_when_large > 0 and n_inf >= stop_when_large:
                status = 2
                break
        if n_inf == 0:
            ext = t
            break
        t_next = t + np.random.exponential(1.0 / (n_inf * unit))
        while gi < G and grid[gi] < t_next and grid[gi] <= horizon:
            counts[gi, 0] = n_inf
            counts[gi, 1] = n_hist
            counts[gi, 2] = n_pion
            counts[gi, 3] = nodes[0, INF]
            gi += 1
        if t_next > horizon:
            break
        t = t_next
        v = inf[min(int(np.random.random() * n_inf), n_inf - 1)]
        r = np.random.random() * unit
        if r < 1.0:
            nodes[v, INF] = 0
            i = nodes[v, POS]
            n_inf -= 1
            last = inf[n_inf]
            inf[i] = last
            nodes[last, POS] = i
            nodes[v, POS] = -1
            if nodes[v, HN] < _deg(v, d, severed):
                n_pion -= 1
            continue
        s = min(int((r - 1.0) / lam), d - 1)
        if s >= _deg(v, d, severed):
            continue
        u = _nbr(nodes, v, s)
        if nodes[u, INF] == 0:
            w = u
    if ext < np.inf:
        while gi < G:
            if grid[gi] <= horizon:
                counts[gi, 0] = 0
                counts[gi, 1] = n_hist
                counts[gi, 2] = 0
                counts[gi, 3] = 0
            gi += 1
    return counts, ext, status, reinf, nodes[:n_nodes].copy(), n_nodes


@njit(cache=True)
def _coupled_kernel(d, lam, horizon, grid, seed, budget):
    """Full-tree process xi and severed process eta on one event structure.

    The severed tree is the root plus the branch of child 0.  Returns grid
    counts of (|xi|, |eta|) and the number of events at which eta was not a
    subset of xi (always 0 for a correct coupling).
    """
    np.random.seed(seed)
    cap = 256
    par = np.empty(cap, dtype=np.int64)
    cb = np.empty(cap, dtype=np.int64)
    xi = np.zeros(cap, dtype=np.int64)
    eta = np.zeros(cap, dtype=np.int64)
    pos = np.empty(cap, dtype=np.int64)
    lst = np.empty(cap, dtype=np.int64)
    par[0] = -1
    cb[0] = -1
    n_nodes = 1
    n_xi = 0
    n_eta = 0
    unit = 1.0 + lam * d
    G = len(grid)
    counts = np.full((G, 2), -1, dtype=np.int64)
    gi = 0
    t = 0.0
    bad = 0
    status = 0
    # infect root in both
    w = 0
    w_eta = True
    while True:
        if w >= 0:
            if xi[w] == 0:
                if n_xi == cap or n_nodes + d > cap:
                    ncap = cap
                    while ncap < n_nodes + d + 1 or ncap <= n_xi:
                        ncap *= 2
                    par = _grow1(par, ncap)
                    cb = _grow1(cb, ncap)
                    xi2 = np.zeros(ncap, dtype=np.int64)
                    xi2[:cap] = xi
                    xi = xi2
                    eta2 = np.zeros(ncap, dtype=np.int64)
                    eta2[:cap] = eta
                    eta = eta2
                    pos = _grow1(pos, ncap)
                    lst = _grow1(lst, ncap)
                    cap = ncap
                xi[w] = 1
                pos[w] = n_xi
                lst[n_xi] = w
                n_xi += 1
                if cb[w] == -1:
                    nc = d if w == 0 else d - 1
                    if n_nodes + nc > budget:
                        status = 1
                        break
                    cb[w] = n_nodes
                    for j in range(nc):
                        par[n_nodes + j] = w
                        cb[n_nodes + j] = -1
                        xi[n_nodes + j] = 0
                        eta[n_nodes + j] = 0
                    n_nodes += nc
            if w_eta and eta[w] == 0:
                eta[w] = 1
                n_eta += 1
            w = -1
        if n_xi == 0:
            break
        t_next = t + np.random.exponential(1.0 / (n_xi * unit))
        while gi < G and grid[gi] < t_next and grid[gi] <= horizon:
            counts[gi, 0] = n_xi
            counts[gi, 1] = n_eta
            gi += 1
        if t_next > horizon:
            break
        t = t_next
        v = lst[min(int(np.random.random() * n_xi), n_xi - 1)]
        r = np.random.random() * unit
        if r < 1.0:
            xi[v] = 0
            i = pos[v]
            n_xi -= 1
            last = lst[n_xi]
            lst[i] = last
            pos[last] = i
            if eta[v] == 1:
                eta[v] = 0
                n_eta -= 1
            continue
        s = min(int((r - 1.0) / lam), d - 1)
        if v == 0:
            u = cb[0] + s
        elif s == 0:
            u = par[v]
        else:
            u = cb[v] + s - 1
        w = u
        # severed root only uses its slot 0
        w_eta = eta[v] == 1 and (v != 0 or s == 0)
        if xi[u] == 1 and not (w_eta and eta[u] == 0):
            w = -1
            continue
    # subset check over all materialised nodes
    for x in range(n_nodes):
        if eta[x] == 1 and xi[x] == 0:
            bad += 1
    while gi < G:
        if grid[gi] <= horizon:
            counts[gi, 0] = 0
            counts[gi, 1] = 0
        gi += 1
    return counts, bad, status


@njit(cache=True)
def _two_process_kernel(d, lam, horizon, grid, seed, budget):
    """Two independent processes from o on one lazily grown tree.

    Returns grid counts of (|hist1|, |hist2|, |hist1 & hist2|) and status.
    """
    np.random.seed(seed)
    cap = 256
    par = np.empty(cap, dtype=np.int64)
    cb = np.full(cap, -1, dtype=np.int64)
    st = np.zeros((cap, 4), dtype=np.int64)  # inf1, inf2, hist1, hist2
    pos = np.full((cap, 2), -1, dtype=np.int64)
    lst = np.empty((cap, 2), dtype=np.int64)
    par[0] = -1
    n_nodes = 1
    n = np.zeros(2, dtype=np.int64)
    nh = np.zeros(2, dtype=np.int64)
    inter = 0
    unit = 1.0 + lam * d
    G = len(grid)
    counts = np.full((G, 3), -1, dtype=np.int64)
    gi = 0
    t = 0.0
    status = 0
    pend_w = np.array([0, 0])
    pend_p = np.array([0, 1])
    n_pend = 2
    while True:
        for q in range(n_pend):
            w = pend_w[q]
            p = pend_p[q]
            if st[w, p] == 1:
                continue
            need = max(n_nodes + d + 1, n[0] + n[1] + 2)
            if need > cap:
                ncap = cap
                while ncap < need:
                    ncap *= 2
                par = _grow1(par, ncap)
                cb2 = np.full(ncap, -1, dtype=np.int64)
                cb2[:cap] = cb
                cb = cb2
                st2 = np.zeros((ncap, 4), dtype=np.int64)
                st2[:cap] = st
                st = st2
                pos2 = np.full((ncap, 2), -1, dtype=np.int64)
                pos2[:cap] = pos
                pos = pos2
                lst = _grow2(lst, ncap)
                cap = ncap
            st[w, p] = 1
            pos[w, p] = n[p]
            lst[n[p], p] = w
            n[p] += 1
            if st[w, 2 + p] == 0:
                st[w, 2 + p] = 1
                nh[p] += 1
                if st[w, 3 - p] == 1:
                    inter += 1
            if cb[w] == -1:
                nc = d if w == 0 else d - 1
                if n_nodes + nc > budget:
                    status = 1
                    break
                cb[w] = n_nodes
                for j in range(nc):
                    par[n_nodes + j] = w
                n_nodes += nc
        if status != 0:
            break
        n_pend = 0
        tot = n[0] + n[1]
        if tot == 0:
            break
        t_next = t + np.random.exponential(1.0 / (tot * unit))
        while gi < G and grid[gi] < t_next and grid[gi] <= horizon:
            counts[gi, 0] = nh[0]
            counts[gi, 1] = nh[1]
            counts[gi, 2] = inter
            gi += 1
        if t_next > horizon:
            break
        t = t_next
        k = min(int(np.random.random() * tot), tot - 1)
        p = 0 if k < n[0] else 1
        v = lst[k if p == 0 else k - n[0], p]
        r = np.random.random() * unit
        if r < 1.0:
            st[v, p] = 0
            i = pos[v, p]
            n[p] -= 1
            last = lst[n[p], p]
            lst[i, p] = last
            pos[last, p] = i
            pos[v, p] = -1
            continue
        s = min(int((r - 1.0) / lam), d - 1)
        if v == 0:
            u = cb[0] + s
        elif s == 0:
            u = par[v]
        else:
            u = cb[v] + s - 1
        if st[u, p] == 0:
            pend_w[0] = u
            pend_p[0] = p
            n_pend = 1
    while gi < G:
        if grid[gi] <= horizon:
            counts[gi, 0] = nh[0]
            counts[gi, 1] = nh[1]
            counts[gi, 2] = inter
        gi += 1
    return counts, status


@njit(cache=True)
def _multitype_tree_kernel(d, lam, severed, k, horizon, seed, budget):
    np.random.seed(seed)
    W = (k + 63) // 64
    cap = 256
    par = np.empty(cap, dtype=np.int64)
    cb = np.full(cap, -1, dtype=np.int64)
    mask = np.zeros((cap, W), dtype=np.uint64)
    upos = np.full(cap, -1, dtype=np.int64)
    ulist = np.empty(cap, dtype=np.int64)
    par[0] = -1
    n_nodes = 1
    size = 0
    alive = np.zeros(k, dtype=np.int64)
    unit = 1.0 + lam * d
    t = 0.0
    born = 0
    status = 0
    while True:
        t_birth = born + 1.0 if born < k else np.inf
        dt = np.random.exponential(1.0 / (size * unit)) if size > 0 else np.inf
        u = -1
        gain_from = -1
        if t + dt >= t_birth and t_birth <= horizon:
            t = t_birth
            u = 0
        else:
            if t + dt > horizon or size == 0:
                break
            t += dt
            v = ulist[min(int(np.random.random() * size), size - 1)]
            r = np.random.random() * unit
            if r < 1.0:
                for ww in range(W):
                    x = mask[v, ww]
                    while x:
                        low = x & (~x + np.uint64(1))
                        b = 0
                        y = low
                        while y > np.uint64(1):
                            y >>= np.uint64(1)
                            b += 1
                        alive[64 * ww + b] -= 1
                        x ^= low
                    mask[v, ww] = 0
                i = upos[v]
                size -= 1
                last = ulist[size]
                ulist[i] = last
                upos[last] = i
                upos[v] = -1
                continue
            s = min(int((r - 1.0) / lam), d - 1)
            if s >= _deg(v, d, severed):
                continue
            if v == 0:
                u = cb[0] + s
            elif s == 0:
                u = par[v]
            else:
                u = cb[v] + s - 1
            gain_from = v
        # u receives types: a newborn type or the types of gain_from
        if u >= 0:
            gained = False
            for ww in range(W):
                if gain_from < 0:
                    new = np.uint64(0)
                    if ww == born // 64:
                        new = (np.uint64(1) << np.uint64(born % 64)) & ~mask[u, ww]
                else:
                    new = mask[gain_from, ww] & ~mask[u, ww]
                if new:
                    gained = True
                    mask[u, ww] |= new
                    x = new
                    while x:
                        low = x & (~x + np.uint64(1))
                        b = 0
                        y = low
                        while y > np.uint64(1):
                            y >>= np.uint64(1)
                            b += 1
                        alive[64 * ww + b] += 1
                        x ^= low
            if gain_from < 0:
                born += 1
            if gained and upos[u] < 0:
                if size == ulist.shape[0]:
                    ulist = _grow1(ulist, size + 1)
                upos[u] = size
                ulist[size] = u
                size += 1
                if cb[u] == -1:
                    nc = _nchild(u, d, severed)
                    if n_nodes + nc > budget:
                        status = 1
                        break
                    if n_nodes + nc > cap:
                        ncap = cap
                        while ncap < n_nodes + nc:
                            ncap *= 2
                        par = _grow1(par, ncap)
                        cb2 = np.full(ncap, -1, dtype=np.int64)
                        cb2[:cap] = cb
                        cb = cb2
                        m2 = np.zeros((ncap, W), dtype=np.uint64)
                        m2[:cap] = mask
                        mask = m2
                        up2 = np.full(ncap, -1, dtype=np.int64)
                        up2[:cap] = upos
                        upos = up2
                        cap = ncap
                    cb[u] = n_nodes
                    for j in range(nc):
                        par[n_nodes + j] = u
                    n_nodes += nc
    return alive, status


# ----------------------------------------------------------------------------
# public API

def _node_address(nodes: np.ndarray, v: int, d: int, severed: bool) -> TreeAddress:
    path = []
    while v != 0:
        p = int(nodes[v, PAR])
        path.append(int(v - nodes[p, CB]))
        v = p
    return tuple(reversed(path))


def simulate_tree(
    params: ProcessParams,
    horizon: float,
    severed: bool,
    seed: int,
    grid: Sequence[float],
    d: int = 3,
    budget: int = DEFAULT_BUDGET,
    keep_state: bool = False,
) -> TreeRun:
    """Contact process from {o} on T_d (or the severed tree).

    Returns ``|xi_t|``, ``|history_t|`` and ``|pioneers_t|`` at each grid time.
    Raises :class:`BudgetExceeded` rather than truncating.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if d < 3:
        raise ValueError("d must be at least 3")
    grid = np.asarray(grid, dtype=np.float64)
    counts, ext, status, reinf, nodes, n_nodes = _tree_kernel(
        int(d), float(params.lam), bool(severed), float(horizon), grid, int(seed) & 0xFFFFFFFF, int(budget), 0
    )
    if status == 1:
        raise BudgetExceeded(f"tree exceeded its budget of {budget} nodes")
    state = None
    if keep_state:
        cur = {_node_address(nodes, v, d, severed) for v in np.flatnonzero(nodes[:, INF]).tolist()}
        hist = {_node_address(nodes, v, d, severed) for v in np.flatnonzero(nodes[:, HIST]).tolist()}
        state = TreeInfectionState(d, severed, cur, hist, min(float(horizon), float(ext)))
    return TreeRun(grid, counts[:, 0], counts[:, 1], counts[:, 2], counts[:, 3],
                   alive=not math.isfinite(ext), extinction_time=float(ext),
                   root_reinfections=int(reinf), state=state)


def tree_batch(params: ProcessParams, grid: Sequence[float], replicas: int, seed: int, d: int = 3,
               severed: bool = False, budget: int = DEFAULT_BUDGET, start: int = 0):
    """Grid counts over many replicas.

    Returns ``(counts[R, G, 4], extinction_times[R], root_reinfections[R])``
    with columns xi, history, pioneers, root-infected.
    """
    grid = np.asarray(grid, dtype=np.float64)
    horizon = float(grid[-1])
    out = np.empty((replicas, len(grid), 4), dtype=np.int64)
    ext = np.empty(replicas)
    reinf = np.empty(replicas, dtype=np.int64)
    for i, s in enumerate(replica_seeds(seed, start, start + replicas)):
        c, e, status, rf, _, _ = _tree_kernel(int(d), float(params.lam), bool(severed), horizon, grid,
                                              int(s), int(budget), 0)
        if status == 1:
            raise BudgetExceeded(f"replica {start + i} exceeded the budget of {budget} nodes")
        out[i] = c
        ext[i] = e
        reinf[i] = rf
    return out, ext, reinf


def coupled_severed(params: ProcessParams, grid: Sequence[float], seed: int, d: int = 3,
                    budget: int = DEFAULT_BUDGET):
    """Grid counts of (|xi|, |eta|) on a shared event structure and the number
    of subset violations found."""
    grid = np.asarray(grid, dtype=np.float64)
    counts, bad, status = _coupled_kernel(int(d), float(params.lam), float(grid[-1]), grid,
                                          int(seed) & 0xFFFFFFFF, int(budget))
    if status == 1:
        raise BudgetExceeded(f"tree exceeded its budget of {budget} nodes")
    return counts, int(bad)


def two_process_histories(params: ProcessParams, grid: Sequence[float], seed: int, d: int = 3,
                          budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Grid counts of (|H1|, |H2|, |H1 & H2|) for two i.i.d. processes."""
    grid = np.asarray(grid, dtype=np.float64)
    counts, status = _two_process_kernel(int(d), float(params.lam), float(grid[-1]), grid,
                                         int(seed) & 0xFFFFFFFF, int(budget))
    if status == 1:
        raise BudgetExceeded(f"tree exceeded its budget of {budget} nodes")
    return counts


def multitype_tree_alive(d: int, k: int, lam: float, horizon: float, seed: int, severed: bool = False,
                         budget: int = DEFAULT_BUDGET) -> np.ndarray:
    alive, status = _multitype_tree_kernel(int(d), float(lam), bool(severed), int(k), float(horizon),
                                           int(seed) & 0xFFFFFFFF, int(budget))
    if status == 1:
        raise BudgetExceeded(f"multi-type tree exceeded its budget of {budget} nodes")
    return alive


def yule_reference(rate: float, t: float, seed: int, replicas: int) -> np.ndarray:
    """Empirical pmf of a Yule process started from one particle.

    ``pmf[k]`` estimates P(Y_t = k); index 0 is always 0.
    """
    if not rate > 0 or not t > 0:
        raise ValueError("rate and t must be positive")
    rng = np.random.default_rng(int(seed) & ((1 << 64) - 1))
    size = np.ones(replicas, dtype=np.int64)
    clock = np.zeros(replicas)
    live = np.ones(replicas, dtype=bool)
    while live.any():
        idx = np.flatnonzero(live)
        clock[idx] += rng.exponential(1.0 / (rate * size[idx]))
        born = clock[idx] <= t
        size[idx[born]] += 1
        live[idx[~born]] = False
    return np.bincount(size) / replicas


def yule_pmf(k, t_eff: float):
    """Geometric law P(Y = k) = e^{-t'} (1 - e^{-t'})^{k-1}."""
    k = np.asarray(k)
    q = math.exp(-t_eff)
    return q * (1 - q) ** (k - 1)
