"""Contact process on finite multigraphs.

Two engines share one law:

* the *fast* engine keeps the set of active half-edges (infected owner,
  healthy partner) and draws the next event from total rate
  ``lam * |active| + |infected|``;
* the *event-log* engine pre-samples every Poisson mark of the graphical
  construction on ``[0, T]`` and replays them, so that several initial sets
  can be run on one realization.

Recovery rate is 1.  A pair of parallel edges is two independent rate-``lam``
channels; a loop never transmits anything.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from ._seeding import derive, replica_seed, replica_seeds
from .graph import Multigraph


@dataclass(frozen=True)
class ProcessParams:
    lam: float

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"infection rate must be a finite non-negative number, got {self.lam}")


@dataclass
class Trajectory:
    initial: frozenset
    horizon: float
    jump_times: np.ndarray
    jump_vertex: np.ndarray
    jump_sign: np.ndarray  # +1 infection, -1 recovery
    extinction_time: float  # inf when still alive at the horizon
    grid: np.ndarray
    grid_counts: np.ndarray  # -1 for grid points past the horizon

    @property
    def extinct(self) -> bool:
        return math.isfinite(self.extinction_time)

    def state_at(self, t: float) -> set[int]:
        """Replay jumps up to and including time ``t``."""
        state = set(self.initial)
        k = int(np.searchsorted(self.jump_times, t, side="right"))
        for v, s in zip(self.jump_vertex[:k].tolist(), self.jump_sign[:k].tolist()):
            if s > 0:
                state.add(v)
            else:
                state.discard(v)
        return state

    def csv_rows(self, replica: int):
        for t, c in zip(self.grid.tolist(), self.grid_counts.tolist()):
            if c < 0:
                continue
            yield (replica, t, c, int(t >= self.extinction_time))


@dataclass
class ReinfectionRecord:
    marked: int
    times: np.ndarray
    k_target: int
    extinct: bool
    extinction_time: float
    survived_cond: bool = True
    certified: bool = False

    def __len__(self):
        return len(self.times)

    def csv_rows(self, replica: int):
        for k, t in enumerate(self.times.tolist(), start=1):
            yield (replica, k, t, 0)
        if self.extinct and len(self.times) < self.k_target:
            yield (replica, len(self.times) + 1, "", 1)


@dataclass
class EventLog:
    """Graphical construction on ``[0, horizon]``.

    ``edge_events[e]`` are the marks of matching pair ``e`` and
    ``recovery_events[v]`` the recovery marks of vertex ``v``.
    """

    horizon: float
    edge_events: list[np.ndarray]
    recovery_events: list[np.ndarray]
    seed: int | None = None

    def merged(self, n: int):
        """Events sorted by (time, id), vertices ``0..n-1`` then edges."""
        times = [self.recovery_events[v] for v in range(n)] + list(self.edge_events)
        ids = [np.full(len(a), i, dtype=np.int64) for i, a in enumerate(times)]
        if not times:
            return np.empty(0), np.empty(0, dtype=np.int64)
        t = np.concatenate(times) if times else np.empty(0)
        gid = np.concatenate(ids) if ids else np.empty(0, dtype=np.int64)
        order = np.lexsort((gid, t))
        return t[order], gid[order]


# ----------------------------------------------------------------------------
# list-with-positions helpers; cnt[k] is the size of list k

@njit(cache=True)
def _push(item, lst, pos, cnt, k):
    pos[item] = cnt[k]
    lst[cnt[k]] = item
    cnt[k] += 1


@njit(cache=True)
def _pop(item, lst, pos, cnt, k):
    i = pos[item]
    cnt[k] -= 1
    last = lst[cnt[k]]
    lst[i] = last
    pos[last] = i
    pos[item] = -1


@njit(cache=True)
def _infect(v, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner):
    infected[v] = True
    _push(v, inf_list, inf_pos, cnt, 0)
    for idx in range(offsets[v], offsets[v + 1]):
        h = half[idx]
        p = partner[h]
        w = owner[p]
        if w == v:
            continue
        if infected[w]:
            _pop(p, active, act_pos, cnt, 1)
        else:
            _push(h, active, act_pos, cnt, 1)


@njit(cache=True)
def _recover(v, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner):
    infected[v] = False
    _pop(v, inf_list, inf_pos, cnt, 0)
    for idx in range(offsets[v], offsets[v + 1]):
        h = half[idx]
        p = partner[h]
        w = owner[p]
        if w == v:
            continue
        if infected[w]:
            _push(p, active, act_pos, cnt, 1)
        else:
            _pop(h, active, act_pos, cnt, 1)


@njit(cache=True)
def _clear(infected, inf_list, inf_pos, active, act_pos, cnt):
    for i in range(cnt[0]):
        v = inf_list[i]
        infected[v] = False
        inf_pos[v] = -1
    for i in range(cnt[1]):
        act_pos[active[i]] = -1
    cnt[0] = 0
    cnt[1] = 0


@njit(cache=True)
def _step(lam, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner):
    """Apply one event; returns (vertex, sign)."""
    n_inf = cnt[0]
    total = n_inf + lam * cnt[1]
    r = np.random.random() * total
    if r < n_inf:
        v = inf_list[min(int(r), n_inf - 1)]
        _recover(v, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
        return v, -1
    k = min(int((r - n_inf) / lam), cnt[1] - 1)
    w = owner[partner[active[k]]]
    _infect(w, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
    return w, 1


@njit(cache=True)
def _grow(a, size):
    b = np.empty(max(2 * len(a), size), dtype=a.dtype)
    b[: len(a)] = a
    return b


@njit(cache=True)
def _simulate_kernel(offsets, half, owner, partner, n, lam, init, horizon, grid, seed, record):
    np.random.seed(seed)
    infected = np.zeros(n, dtype=np.bool_)
    inf_list = np.empty(n, dtype=np.int64)
    inf_pos = np.full(n, -1, dtype=np.int64)
    n_half = len(owner)
    active = np.empty(max(n_half, 1), dtype=np.int64)
    act_pos = np.full(max(n_half, 1), -1, dtype=np.int64)
    cnt = np.zeros(2, dtype=np.int64)
    for v in init:
        if not infected[v]:
            _infect(v, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
    cap = 64 if record else 1
    jt = np.empty(cap, dtype=np.float64)
    jv = np.empty(cap, dtype=np.int64)
    js = np.empty(cap, dtype=np.int8)
    nj = 0
    counts = np.full(len(grid), -1, dtype=np.int64)
    gi = 0
    t = 0.0
    ext = np.inf
    while True:
        total = cnt[0] + lam * cnt[1]
        if total <= 0.0:
            ext = t
            while gi < len(grid):
                if grid[gi] <= horizon:
                    counts[gi] = 0
                gi += 1
            break
        t_next = t + np.random.exponential(1.0 / total)
        while gi < len(grid) and grid[gi] < t_next and grid[gi] <= horizon:
            counts[gi] = cnt[0]
            gi += 1
        if t_next > horizon:
            break
        t = t_next
        v, s = _step(lam, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
        if record:
            if nj == len(jt):
                jt = _grow(jt, nj + 1)
                jv = _grow(jv, nj + 1)
                js = _grow(js, nj + 1)
            jt[nj] = t
            jv[nj] = v
            js[nj] = s
            nj += 1
    return jt[:nj], jv[:nj], js[:nj], ext, counts


@njit(cache=True)
def _batch_kernel(offsets, half, owner, partner, n, lam, init, horizon, grid, seeds):
    """Extinction times and grid counts for many replicas."""
    R = len(seeds)
    ext = np.full(R, np.inf)
    counts = np.full((R, len(grid)), -1, dtype=np.int64)
    infected = np.zeros(n, dtype=np.bool_)
    inf_list = np.empty(n, dtype=np.int64)
    inf_pos = np.full(n, -1, dtype=np.int64)
    n_half = max(len(owner), 1)
    active = np.empty(n_half, dtype=np.int64)
    act_pos = np.full(n_half, -1, dtype=np.int64)
    cnt = np.zeros(2, dtype=np.int64)
    for r in range(R):
        np.random.seed(seeds[r])
        _clear(infected, inf_list, inf_pos, active, act_pos, cnt)
        for v in init:
            if not infected[v]:
                _infect(v, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
        t = 0.0
        gi = 0
        while True:
            total = cnt[0] + lam * cnt[1]
            if total <= 0.0:
                ext[r] = t
                while gi < len(grid):
                    if grid[gi] <= horizon:
                        counts[r, gi] = 0
                    gi += 1
                break
            t_next = t + np.random.exponential(1.0 / total)
            while gi < len(grid) and grid[gi] < t_next and grid[gi] <= horizon:
                counts[r, gi] = cnt[0]
                gi += 1
            if t_next > horizon:
                break
            t = t_next
            _step(lam, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
    return ext, counts


@njit(cache=True)
def _reinfection_kernel(offsets, half, owner, partner, n, lam, marked, horizon, k_target, t_cond, certify, seed):
    np.random.seed(seed)
    infected = np.zeros(n, dtype=np.bool_)
    inf_list = np.empty(n, dtype=np.int64)
    inf_pos = np.full(n, -1, dtype=np.int64)
    n_half = max(len(owner), 1)
    active = np.empty(n_half, dtype=np.int64)
    act_pos = np.full(n_half, -1, dtype=np.int64)
    cnt = np.zeros(2, dtype=np.int64)
    _infect(marked, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
    times = np.empty(k_target, dtype=np.float64)
    m = 0
    t = 0.0
    ext = np.inf
    while True:
        total = cnt[0] + lam * cnt[1]
        if total <= 0.0:
            ext = t
            break
        t_next = t + np.random.exponential(1.0 / total)
        if t_next > horizon:
            break
        t = t_next
        v, s = _step(lam, infected, inf_list, inf_pos, active, act_pos, cnt, offsets, half, owner, partner)
        if s > 0 and v == marked and m < k_target:
            times[m] = t
            m += 1
        if m >= k_target and (t >= t_cond or cnt[0] >= certify):
            break
    return times[:m], ext, t


def _check_initial(g: Multigraph, initial) -> np.ndarray:
    init = np.unique(np.asarray(sorted(set(int(v) for v in initial)), dtype=np.int64))
    if len(init) == 0:
        raise ValueError("initial infected set must be non-empty")
    if init[0] < 0 or init[-1] >= g.n:
        raise ValueError("initial set has vertices outside the graph")
    return init


def simulate(
    g: Multigraph,
    initial: Iterable[int],
    params: ProcessParams,
    horizon: float,
    seed: int,
    grid: Sequence[float] = (),
    record: bool = True,
) -> Trajectory:
    """Run the fast engine from ``initial`` up to ``horizon`` or extinction."""
    init = _check_initial(g, initial)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    grid = np.asarray(grid, dtype=np.float64)
    jt, jv, js, ext, counts = _simulate_kernel(
        *g.arrays(), g.n, float(params.lam), init, float(horizon), grid, int(seed) & 0xFFFFFFFF, record
    )
    return Trajectory(frozenset(init.tolist()), float(horizon), jt, jv, js, float(ext), grid, counts)


def simulate_batch(g: Multigraph, initial, params: ProcessParams, horizon: float, replicas: int,
                   seed: int, grid: Sequence[float] = (), start: int = 0):
    """Extinction times and grid counts for replicas ``start .. start+replicas-1``."""
    init = _check_initial(g, initial)
    seeds = replica_seeds(seed, start, start + replicas)
    return _batch_kernel(*g.arrays(), g.n, float(params.lam), init, float(horizon),
                         np.asarray(grid, dtype=np.float64), seeds)


def record_reinfections(
    g: Multigraph,
    marked: int,
    params: ProcessParams,
    horizon: float,
    k_target: int,
    seed: int,
    t_cond: float = 0.0,
    certify_size: int | None = None,
) -> ReinfectionRecord:
    """Healthy-to-infected transition times of ``marked``, started from ``{marked}``.

    The infection at time 0 is not counted.  The run stops once ``k_target``
    reinfections are seen and ``t_cond`` has passed, at extinction, or at the
    horizon.  ``survived_cond`` reports whether the process was alive at
    ``t_cond``.

    With ``certify_size`` set, a run that has ``k_target`` reinfections and at
    least that many infected vertices stops early and counts as surviving
    past ``t_cond`` (the chance of dying out from there before ``t_cond`` is
    negligible for large ``certify_size``).
    """
    if k_target < 1:
        raise ValueError("k_target must be at least 1")
    if not 0 <= marked < g.n:
        raise ValueError(f"marked vertex {marked} outside the graph")
    if t_cond > horizon:
        raise ValueError("t_cond must not exceed the horizon")
    certify = g.n + 1 if certify_size is None else max(int(certify_size), 1)
    times, ext, t_stop = _reinfection_kernel(*g.arrays(), g.n, float(params.lam), int(marked), float(horizon),
                                             int(k_target), float(t_cond), certify, int(seed) & 0xFFFFFFFF)
    extinct = bool(math.isfinite(ext))
    return ReinfectionRecord(int(marked), times, int(k_target), extinct, float(ext),
                             survived_cond=not extinct or ext > t_cond, certified=not extinct and t_stop < t_cond)


# ----------------------------------------------------------------------------
# graphical construction

def sample_event_log(g: Multigraph, params: ProcessParams, horizon: float, seed: int) -> EventLog:
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    rng = np.random.default_rng(int(seed) & ((1 << 64) - 1))

    def marks(rate):
        k = rng.poisson(rate * horizon)
        return np.sort(rng.uniform(0.0, horizon, k))

    recov = [marks(1.0) for _ in range(g.n)]
    edges = [marks(params.lam) for _ in range(len(g.matching))]
    return EventLog(float(horizon), edges, recov, seed=int(seed))


@njit(cache=True)
def _replay_kernel(n, edge_u, edge_v, ev_t, ev_id, init_mask, t_end, grid):
    state = init_mask.copy()
    n_inf = 0
    for v in range(n):
        if state[v]:
            n_inf += 1
    jt = np.empty(len(ev_t), dtype=np.float64)
    jv = np.empty(len(ev_t), dtype=np.int64)
    js = np.empty(len(ev_t), dtype=np.int8)
    nj = 0
    counts = np.full(len(grid), -1, dtype=np.int64)
    gi = 0
    ext = np.inf if n_inf > 0 else 0.0
    for i in range(len(ev_t)):
        t = ev_t[i]
        if t > t_end:
            break
        while gi < len(grid) and grid[gi] < t:
            counts[gi] = n_inf
            gi += 1
        e = ev_id[i]
        if e < n:
            if state[e]:
                state[e] = False
                n_inf -= 1
                jt[nj] = t
                jv[nj] = e
                js[nj] = -1
                nj += 1
                if n_inf == 0:
                    ext = t
                    break
        else:
            a = edge_u[e - n]
            b = edge_v[e - n]
            if state[a] != state[b]:
                w = b if state[a] else a
                state[w] = True
                n_inf += 1
                jt[nj] = t
                jv[nj] = w
                js[nj] = 1
                nj += 1
    while gi < len(grid) and grid[gi] <= t_end:
        counts[gi] = n_inf
        gi += 1
    return jt[:nj], jv[:nj], js[:nj], ext, counts, state


def _edge_endpoints(g: Multigraph):
    return g.owner[g.matching[:, 0]].copy(), g.owner[g.matching[:, 1]].copy()


def simulate_log(g: Multigraph, log: EventLog, initial: Iterable[int], grid: Sequence[float] = ()) -> Trajectory:
    """Replay ``log`` from ``initial``; loops (u == v) never change anything."""
    init = _check_initial(g, initial)
    mask = np.zeros(g.n, dtype=np.bool_)
    mask[init] = True
    t, gid = log.merged(g.n)
    eu, ev = _edge_endpoints(g)
    grid = np.asarray(grid, dtype=np.float64)
    jt, jv, js, ext, counts, _ = _replay_kernel(g.n, eu, ev, t, gid, mask, float(log.horizon), grid)
    return Trajectory(frozenset(init.tolist()), log.horizon, jt, jv, js, float(ext), grid, counts)


@njit(cache=True)
def _sample_marks(n, m, lam, t_end):
    ts = []
    ids = []
    for v in range(n):
        k = np.random.poisson(t_end)
        for _ in range(k):
            ts.append(np.random.uniform(0.0, t_end))
            ids.append(v)
    if lam > 0:
        for e in range(m):
            k = np.random.poisson(lam * t_end)
            for _ in range(k):
                ts.append(np.random.uniform(0.0, t_end))
                ids.append(n + e)
    t = np.empty(len(ts), dtype=np.float64)
    gid = np.empty(len(ts), dtype=np.int64)
    for i in range(len(ts)):
        t[i] = ts[i]
        gid[i] = ids[i]
    order = np.argsort(t, kind="mergesort")
    return t[order], gid[order]


@njit(cache=True)
def _batch_log_kernel(n, edge_u, edge_v, lam, t_end, init_mask, target_mask, grid, seeds):
    R = len(seeds)
    hits = np.zeros(R, dtype=np.bool_)
    counts = np.empty((R, len(grid)), dtype=np.int64)
    for r in range(R):
        np.random.seed(seeds[r])
        t, gid = _sample_marks(n, len(edge_u), lam, t_end)
        _, _, _, _, c, state = _replay_kernel(n, edge_u, edge_v, t, gid, init_mask, t_end, grid)
        counts[r] = c
        for v in range(n):
            if state[v] and target_mask[v]:
                hits[r] = True
                break
    return hits, counts


def log_batch(g: Multigraph, initial, params: ProcessParams, t: float, replicas: int, seed: int,
              target: Iterable[int] = (), grid: Sequence[float] = ()):
    """Event-log engine over many replicas: (hit indicators of ``target`` at ``t``, grid counts)."""
    init = _check_initial(g, initial)
    mask = np.zeros(g.n, dtype=np.bool_)
    mask[init] = True
    tmask = np.zeros(g.n, dtype=np.bool_)
    tmask[list(target)] = True
    eu, ev = _edge_endpoints(g)
    return _batch_log_kernel(g.n, eu, ev, float(params.lam), float(t), mask, tmask,
                             np.asarray(grid, dtype=np.float64), replica_seeds(seed, 0, replicas))


def _set_key(s) -> tuple[int, ...]:
    s = sorted(set(int(v) for v in s))
    return (len(s), *s)


def duality_check(g: Multigraph, A, B, params: ProcessParams, t: float, replicas: int, seed: int):
    """Estimate P(xi_t^A meets B) and P(xi_t^B meets A) and their z-score.

    Each direction uses its own seed stream keyed by the ordered pair of sets,
    so the estimates are independent when A != B and identical when A == B.
    """
    A = set(int(v) for v in A)
    B = set(int(v) for v in B)
    if not A or not B:
        raise ValueError("both vertex sets must be non-empty")
    if t < 0:
        raise ValueError("time must be non-negative")
    s_ab = derive(seed, *_set_key(A), *_set_key(B))
    s_ba = derive(seed, *_set_key(B), *_set_key(A))
    hits_ab, _ = log_batch(g, A, params, t, replicas, s_ab, target=B)
    hits_ba, _ = log_batch(g, B, params, t, replicas, s_ba, target=A)
    p_ab = float(hits_ab.mean())
    p_ba = float(hits_ba.mean())
    pooled = (p_ab + p_ba) / 2
    var = pooled * (1 - pooled) * 2 / replicas
    z = 0.0 if var == 0 else (p_ab - p_ba) / math.sqrt(var)
    return p_ab, p_ba, z


# ----------------------------------------------------------------------------
# multi-type runs on one graphical construction

@njit(cache=True)
def _multitype_graph_kernel(offsets, half, owner, partner, n, max_deg, lam, marked, k, horizon, seed):
    # mask[v, w] bit b: type 64*w+b currently at v.  Events are drawn by
    # thinning at rate |U| (1 + lam * max_deg) over the union U.
    np.random.seed(seed)
    W = (k + 63) // 64
    mask = np.zeros((n, W), dtype=np.uint64)
    alive = np.zeros(k, dtype=np.int64)
    ulist = np.empty(n, dtype=np.int64)
    upos = np.full(n, -1, dtype=np.int64)
    cnt = np.zeros(1, dtype=np.int64)
    unit = 1.0 + lam * max_deg
    t = 0.0
    born = 0
    while True:
        t_birth = born + 1.0 if born < k else np.inf
        size = cnt[0]
        dt = np.random.exponential(1.0 / (size * unit)) if size > 0 else np.inf
        if t + dt >= t_birth and t_birth <= horizon:
            t = t_birth
            w, b = born // 64, born % 64
            if upos[marked] < 0:
                _push(marked, ulist, upos, cnt, 0)
            bit = np.uint64(1) << np.uint64(b)
            if (mask[marked, w] & bit) == 0:
                mask[marked, w] |= bit
                alive[born] += 1
            born += 1
            continue
        if t + dt > horizon or size == 0:
            break
        t += dt
        r = np.random.random() * unit
        v = ulist[min(int(np.random.random() * size), size - 1)]
        if r < 1.0:
            for w in range(W):
                x = mask[v, w]
                while x:
                    low = x & (~x + np.uint64(1))
                    b = 0
                    y = low
                    while y > np.uint64(1):
                        y >>= np.uint64(1)
                        b += 1
                    alive[64 * w + b] -= 1
                    x ^= low
                mask[v, w] = 0
            _pop(v, ulist, upos, cnt, 0)
            continue
        slot = min(int((r - 1.0) / lam), max_deg - 1)
        if slot >= offsets[v + 1] - offsets[v]:
            continue
        u = owner[partner[half[offsets[v] + slot]]]
        if u == v:
            continue
        gained = False
        for w in range(W):
            new = mask[v, w] & ~mask[u, w]
            if new:
                gained = True
                mask[u, w] |= new
                x = new
                while x:
                    low = x & (~x + np.uint64(1))
                    b = 0
                    y = low
                    while y > np.uint64(1):
                        y >>= np.uint64(1)
                        b += 1
                    alive[64 * w + b] += 1
                    x ^= low
        if gained and upos[u] < 0:
            _push(u, ulist, upos, cnt, 0)
    return alive


def multi_type_survivors(substrate, k: int, params: ProcessParams, horizon: float, seed: int,
                         marked: int = 0, severed: bool = False, budget: int = 10_000_000) -> int:
    """Number of the ``k`` types still alive at ``horizon``.

    Type ``i`` (``i = 1..k``) is the process started from the marked vertex at
    time ``i``; all types share one graphical construction, so a type is
    alive exactly when its own infected set is non-empty.  ``substrate`` is a
    :class:`Multigraph` or an integer degree ``d`` for the regular tree.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if horizon <= k:
        raise ValueError("horizon must exceed k")
    if isinstance(substrate, Multigraph):
        offsets, half, owner, partner = substrate.arrays()
        max_deg = int(np.max(np.diff(offsets))) if substrate.n else 0
        alive = _multitype_graph_kernel(offsets, half, owner, partner, substrate.n, max(max_deg, 1),
                                        float(params.lam), int(marked), int(k), float(horizon),
                                        int(seed) & 0xFFFFFFFF)
    else:
        from .tree import multitype_tree_alive

        alive = multitype_tree_alive(int(substrate), int(k), params.lam, float(horizon), int(seed),
                                     severed=severed, budget=budget)
    return int(np.count_nonzero(alive > 0))
