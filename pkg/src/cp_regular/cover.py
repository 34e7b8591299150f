"""Universal-cover exploration of the configuration model.

A contact process runs on T_d while the configuration is revealed through
a labelling ``ell: tree -> [N]``.  Each labelled tree vertex carries a
bijection between its ``d`` tree slots and the ``d`` half-edges of its label
(the parent slot is pinned to the half-edge it was reached through; child
slots get a uniformly random arrangement).  The child behind slot ``s`` has
label ``owner(partner(h_s))``; if ``h_s`` is still free when that child is
first infected, ``h_s`` is paired with a uniform other free half-edge.

Marks follow the true/false rules: a truly infected source makes its target
truly infected unless another tree vertex already truly carries the same
label, in which case the target is falsely infected; a falsely infected
source never creates true infection.  The labels of truly infected tree
vertices then form a contact process on the revealed multigraph.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._seeding import replica_seed
from .engine import EventLog, ProcessParams
from .graph import Multigraph, complete_matching

TRUE, FALSE, HEALTHY = "truly_infected", "falsely_infected", "healthy_labelled"


class CouplingError(AssertionError):
    """An internal invariant of the labelling failed (debug mode)."""


@dataclass(frozen=True)
class ClashEvent:
    time: float
    tree_vertex: int
    label: int
    kind: str  # "repeat_label" or "false_source"


@dataclass
class LabelState:
    n: int
    d: int
    ell: dict  # tree vertex -> label
    free_pool: np.ndarray  # unmatched half-edges per label
    matched: list  # realized (h, h') pairs in order of discovery
    marks: dict  # labelled tree vertex -> TRUE / FALSE / HEALTHY


@dataclass
class ExploreResult:
    state: LabelState
    jump_times: np.ndarray
    jump_label: np.ndarray
    jump_sign: np.ndarray
    grid: np.ndarray
    projected_counts: np.ndarray
    tree_counts: np.ndarray
    clashes: list
    extinction_time: float
    end_time: float
    induced_log: EventLog
    _seed: int = 0

    @property
    def first_clash(self) -> ClashEvent | None:
        for c in self.clashes:
            if c.kind == "repeat_label":
                return c
        return None

    def partial_graph(self) -> Multigraph:
        """Revealed edges only, in order of discovery."""
        d = self.state.d
        return Multigraph.from_edges(self.state.n, [(a // d, b // d) for a, b in self.state.matched])

    def completed_graph(self, seed: int) -> Multigraph:
        n, d = self.state.n, self.state.d
        pairs = np.array(self.state.matched, dtype=np.int64).reshape(-1, 2)
        matching = complete_matching(n * d, pairs, seed)
        return Multigraph(n=n, owner=np.arange(n * d, dtype=np.int64) // d, matching=matching, d=d, seed=seed)


class Explorer:
    """Tree contact process with on-the-fly configuration labelling."""

    def __init__(self, n: int, d: int, params: ProcessParams, seed: int, debug: bool = False):
        if d < 3:
            raise ValueError("d must be at least 3")
        if (n * d) % 2:
            raise ValueError(f"d*N must be even, got d={d}, N={n}")
        if n < 1:
            raise ValueError("N must be positive")
        self.n, self.d, self.lam = n, d, float(params.lam)
        self.rng = random.Random(int(seed))
        self.debug = debug
        nh = n * d
        self.partner = [-1] * nh
        self.pair_id = [-1] * nh
        self.n_free = nh
        self.free_pool = np.full(n, d, dtype=np.int64)
        self.matched: list[tuple[int, int]] = []
        # tree storage
        self.parent = [-1]
        self.cbase = [-1]
        self.label = [-1]
        self.hmap: list = [None]
        self.infected = [False]
        self.true = [False]
        self.inf_list: list[int] = []
        self.inf_pos = [-1]
        self.true_copy: dict[int, int] = {}
        self.label_count: dict[int, int] = {}
        self.clashes: list[ClashEvent] = []
        self._seen_repeat = False
        self._seen_false = False
        self.t = 0.0
        # projected trajectory and induced marks
        self.jumps: list[tuple[float, int, int]] = []
        self.rec_marks: dict[int, list] = {}
        self.edge_marks: dict[int, list] = {}
        # root: label 0 (the paper's vertex 1), truly infected
        self._set_label(0, 0, None)
        self._make_infected(0)
        self.true[0] = True
        self.true_copy[0] = 0

    # -- configuration ---------------------------------------------------
    def _pair(self, h: int) -> int:
        nh = self.n * self.d
        if self.n_free < 2:
            raise RuntimeError("free half-edge pool exhausted")
        while True:
            x = self.rng.randrange(nh)
            if x != h and self.partner[x] < 0:
                break
        self.partner[h] = x
        self.partner[x] = h
        self.pair_id[h] = self.pair_id[x] = len(self.matched)
        self.matched.append((h, x))
        self.n_free -= 2
        self.free_pool[h // self.d] -= 1
        self.free_pool[x // self.d] -= 1
        return x

    def _set_label(self, v: int, lab: int, via: int | None):
        d = self.d
        halves = list(range(lab * d, lab * d + d))
        if via is None:
            self.rng.shuffle(halves)
        else:
            halves.remove(via)
            self.rng.shuffle(halves)
            halves.insert(0, via)
        self.label[v] = lab
        self.hmap[v] = halves
        seen = self.label_count.get(lab, 0)
        self.label_count[lab] = seen + 1
        if seen and not self._seen_repeat:
            self._seen_repeat = True
            self.clashes.append(ClashEvent(self.t, v, lab, "repeat_label"))

    # -- tree --------------------------------------------------------------
    def _materialize(self, v: int):
        if self.cbase[v] >= 0:
            return
        nc = self.d if v == 0 else self.d - 1
        base = len(self.parent)
        self.cbase[v] = base
        for _ in range(nc):
            self.parent.append(v)
            self.cbase.append(-1)
            self.label.append(-1)
            self.hmap.append(None)
            self.infected.append(False)
            self.true.append(False)
            self.inf_pos.append(-1)

    def _neighbour(self, v: int, s: int) -> int:
        if v == 0:
            return self.cbase[0] + s
        if s == 0:
            return self.parent[v]
        return self.cbase[v] + s - 1

    def _make_infected(self, v: int):
        self.infected[v] = True
        self.inf_pos[v] = len(self.inf_list)
        self.inf_list.append(v)
        self._materialize(v)

    def _recover(self, v: int):
        self.infected[v] = False
        i = self.inf_pos[v]
        last = self.inf_list.pop()
        if last != v:
            self.inf_list[i] = last
            self.inf_pos[last] = i
        self.inf_pos[v] = -1
        if self.true[v]:
            self.true[v] = False
            lab = self.label[v]
            del self.true_copy[lab]
            self.jumps.append((self.t, lab, -1))
            self.rec_marks.setdefault(lab, []).append(self.t)

    def _fire(self, v: int, s: int):
        u = self._neighbour(v, s)
        src_true = self.true[v]
        h = self.hmap[v][s]
        if self.label[u] < 0:
            # u is the child behind slot s
            hp = self.partner[h]
            if hp < 0:
                hp = self._pair(h)
            self._set_label(u, hp // self.d, hp)
        if src_true:
            self.edge_marks.setdefault(self.pair_id[h], []).append(self.t)
        lab = self.label[u]
        was_inf = self.infected[u]
        if src_true:
            other = self.true_copy.get(lab)
            make_true = other is None or other == u
        else:
            make_true = self.true[u]
        if not was_inf:
            self._make_infected(u)
        if make_true and not self.true[u]:
            self.true[u] = True
            self.true_copy[lab] = u
            self.jumps.append((self.t, lab, 1))
        if not make_true and not was_inf and not self._seen_false:
            self._seen_false = True
            self.clashes.append(ClashEvent(self.t, u, lab, "false_source"))

    def _check(self):
        trues = [v for v in range(len(self.true)) if self.true[v]]
        labs = [self.label[v] for v in trues]
        if len(set(labs)) != len(labs):
            raise CouplingError(f"two truly infected copies of one label at t={self.t}")
        if len(trues) != len(self.true_copy):
            raise CouplingError("true-copy index out of sync")
        for lab, v in self.true_copy.items():
            if not (self.infected[v] and self.true[v] and self.label[v] == lab):
                raise CouplingError("true-copy index points at a non-true vertex")
        if any(self.label[v] < 0 for v in self.inf_list):
            raise CouplingError("infected vertex without a label")

    def run(self, horizon: float, grid: Sequence[float] = (), stop_at_first_clash: bool = False) -> ExploreResult:
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        grid = np.asarray(grid, dtype=np.float64)
        proj = np.full(len(grid), -1, dtype=np.int64)
        tree = np.full(len(grid), -1, dtype=np.int64)
        gi = 0
        unit = 1.0 + self.lam * self.d
        rng = self.rng
        ext = math.inf
        while True:
            n_inf = len(self.inf_list)
            if n_inf == 0:
                ext = self.t
                break
            t_next = self.t + rng.expovariate(n_inf * unit)
            while gi < len(grid) and grid[gi] < t_next and grid[gi] <= horizon:
                proj[gi] = len(self.true_copy)
                tree[gi] = n_inf
                gi += 1
            if t_next > horizon:
                break
            self.t = t_next
            v = self.inf_list[min(int(rng.random() * n_inf), n_inf - 1)]
            r = rng.random() * unit
            if r < 1.0:
                self._recover(v)
            else:
                s = min(int((r - 1.0) / self.lam), self.d - 1)
                self._fire(v, s)
            if self.debug:
                self._check()
            if stop_at_first_clash and self._seen_repeat:
                break
        while gi < len(grid):
            if grid[gi] <= horizon and math.isfinite(ext):
                proj[gi] = 0
                tree[gi] = 0
            gi += 1
        return self._result(horizon, grid, proj, tree, ext)

    def _result(self, horizon, grid, proj, tree, ext) -> ExploreResult:
        ell = {v: lab for v, lab in enumerate(self.label) if lab >= 0}
        marks = {v: (TRUE if self.true[v] else FALSE if self.infected[v] else HEALTHY) for v in ell}
        state = LabelState(self.n, self.d, ell, self.free_pool.copy(), list(self.matched), marks)
        jt = np.array([j[0] for j in self.jumps], dtype=np.float64)
        jl = np.array([j[1] for j in self.jumps], dtype=np.int64)
        js = np.array([j[2] for j in self.jumps], dtype=np.int8)
        end = min(self.t if ext < math.inf else horizon, horizon)
        log = EventLog(
            horizon=end,
            edge_events=[np.array(self.edge_marks.get(e, []), dtype=np.float64) for e in range(len(self.matched))],
            recovery_events=[np.array(self.rec_marks.get(v, []), dtype=np.float64) for v in range(self.n)],
        )
        return ExploreResult(state, jt, jl, js, grid, proj, tree, list(self.clashes), ext, end, log)


def explore(n: int, d: int, params: ProcessParams, horizon: float, seed: int, grid: Sequence[float] = (),
            debug: bool = False, stop_at_first_clash: bool = False) -> ExploreResult:
    """Run the labelled tree process; see :class:`Explorer`."""
    return Explorer(n, d, params, seed, debug=debug).run(horizon, grid, stop_at_first_clash)


def project(state: LabelState) -> set[int]:
    """Labels of the truly infected tree vertices."""
    return {lab for v, lab in state.ell.items() if state.marks[v] == TRUE}


def clash_hazard(i: int, d: int, n: int) -> Fraction:
    """(d + (d-1)(i-1) - 1) / (dN - 2i + 4 - 1), exactly."""
    if not 2 <= i <= n:
        raise ValueError(f"i must satisfy 2 <= i <= N, got i={i}, N={n}")
    return Fraction(d + (d - 1) * (i - 1) - 1, d * n - 2 * i + 4 - 1)


def no_clash_probability(k: int, d: int, n: int) -> Fraction:
    """prod_{i=2}^{k} (1 - (d-1)(i-2) / (dN - 2i + 3))."""
    out = Fraction(1)
    for i in range(2, k + 1):
        out *= 1 - Fraction((d - 1) * (i - 2), d * n - 2 * i + 3)
    return out


@dataclass
class ClashSample:
    n: int
    times: np.ndarray  # nan where the tree died out (or the horizon came) first
    labels: np.ndarray
    survived: np.ndarray

    @property
    def conditioned(self) -> np.ndarray:
        return self.times[self.survived & np.isfinite(self.times)]

    def csv_rows(self, replica_offset: int = 0):
        for r, (t, lab, s) in enumerate(zip(self.times.tolist(), self.labels.tolist(), self.survived.tolist())):
            yield (replica_offset + r, self.n, "" if not math.isfinite(t) else t, lab, int(s))


def first_clash_time(n_grid: Sequence[int], d: int, params: ProcessParams, replicas: int, seed: int,
                     horizon: float = 200.0, start: int = 0) -> dict[int, ClashSample]:
    """First repeat-label time per N; replicas where the tree dies first are
    kept with ``survived = False`` and a NaN time."""
    out = {}
    for n in n_grid:
        times = np.full(replicas, np.nan)
        labels = np.zeros(replicas, dtype=np.int64)
        surv = np.zeros(replicas, dtype=bool)
        for r in range(replicas):
            res = explore(int(n), d, params, horizon, replica_seed(seed, start + r), stop_at_first_clash=True)
            c = res.first_clash
            labels[r] = len(set(res.state.ell.values()))
            if c is not None:
                times[r] = c.time
                surv[r] = True
        out[int(n)] = ClashSample(int(n), times, labels, surv)
    return out
