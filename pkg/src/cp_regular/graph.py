"""Configuration-model multigraphs.

Half-edge ``h`` of a d-regular configuration graph belongs to vertex ``h // d``
(slot ``h % d``).  Vertices are 0-based, so the paper's vertex 1 is vertex 0
here.  General multigraphs (stars, paths, ...) use the same half-edge
representation with an explicit ``owner`` array.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from numba import njit


@dataclass(frozen=True)
class HalfEdge:
    owner: int
    slot: int

    @classmethod
    def from_id(cls, h: int, d: int) -> "HalfEdge":
        return cls(h // d, h % d)

    def id(self, d: int) -> int:
        return self.owner * d + self.slot


@dataclass(frozen=True, eq=False)
class Multigraph:
    """A multigraph stored as a perfect matching of half-edges.

    ``owner[h]`` is the vertex of half-edge ``h`` and ``matching`` holds the
    ``(h, h')`` pairs.  Loops and parallel edges are allowed.  ``d`` is set
    for regular configuration graphs and ``None`` otherwise.
    """

    n: int
    owner: np.ndarray
    matching: np.ndarray
    d: int | None = None
    seed: int | None = None

    def __post_init__(self):
        for arr in (self.owner, self.matching):
            arr.flags.writeable = False

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], seed: int | None = None) -> "Multigraph":
        edges = [(int(u), int(v)) for u, v in edges]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        owner = np.array([x for e in edges for x in e], dtype=np.int64)
        matching = np.arange(2 * len(edges), dtype=np.int64).reshape(-1, 2)
        deg = np.bincount(owner, minlength=n) if len(owner) else np.zeros(n, dtype=np.int64)
        d = int(deg[0]) if n and len(owner) and np.all(deg == deg[0]) else None
        return cls(n=n, owner=owner, matching=matching, d=d, seed=seed)

    @property
    def n_half_edges(self) -> int:
        return len(self.owner)

    @cached_property
    def partner(self) -> np.ndarray:
        p = np.empty(len(self.owner), dtype=np.int64)
        p[self.matching[:, 0]] = self.matching[:, 1]
        p[self.matching[:, 1]] = self.matching[:, 0]
        p.flags.writeable = False
        return p

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR view ``(offsets, half_edges)``: half-edges of ``v`` are
        ``half_edges[offsets[v]:offsets[v+1]]``."""
        order = np.argsort(self.owner, kind="stable").astype(np.int64)
        counts = np.bincount(self.owner, minlength=self.n)
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        order.flags.writeable = False
        offsets.flags.writeable = False
        return offsets, order

    @cached_property
    def degrees(self) -> np.ndarray:
        # a loop contributes two half-edges, hence degree 2
        return np.bincount(self.owner, minlength=self.n)

    @cached_property
    def edges(self) -> Counter:
        """Multiset of unordered vertex pairs ``(u, v)`` with ``u <= v``."""
        a = self.owner[self.matching[:, 0]]
        b = self.owner[self.matching[:, 1]]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return Counter(zip(lo.tolist(), hi.tolist()))

    def neighbours(self, v: int) -> list[int]:
        offsets, half = self.incidence
        hs = half[offsets[v]:offsets[v + 1]]
        return self.owner[self.partner[hs]].tolist()

    def arrays(self):
        """Flat arrays consumed by the simulation kernels."""
        offsets, half = self.incidence
        return offsets, half, self.owner, self.partner

    def to_text(self) -> str:
        lines = [f"{self.n} {self.d if self.d is not None else '-'} {self.seed if self.seed is not None else '-'}"]
        for (u, v), m in sorted(self.edges.items()):
            lines.append(f"{u} {v} {m}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "Multigraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        n_s, d_s, seed_s = rows[0]
        edges = []
        for u, v, m in rows[1:]:
            edges.extend([(int(u), int(v))] * int(m))
        g = cls.from_edges(int(n_s), edges, seed=None if seed_s == "-" else int(seed_s))
        if d_s != "-" and g.d != int(d_s):
            raise ValueError(f"header degree {d_s} does not match the edge list")
        return g

    @classmethod
    def load(cls, path: str | Path) -> "Multigraph":
        return cls.from_text(Path(path).read_text())


@njit(cache=True)
def _partner_draw(n_half, seed):
    # Scan half-edges in index order; pair each unmatched one with a uniform
    # unmatched partner.  pool/pos implement O(1) removal.
    np.random.seed(seed)
    pool = np.arange(n_half)
    pos = np.arange(n_half)
    partner = np.full(n_half, -1, dtype=np.int64)
    out = np.empty((n_half // 2, 2), dtype=np.int64)
    size = n_half
    k = 0
    for h in range(n_half):
        if partner[h] >= 0:
            continue
        # remove h
        i = pos[h]
        last = pool[size - 1]
        pool[i] = last
        pos[last] = i
        size -= 1
        j = np.random.randint(0, size)
        p = pool[j]
        last = pool[size - 1]
        pool[j] = last
        pos[last] = j
        size -= 1
        partner[h] = p
        partner[p] = h
        out[k, 0] = h
        out[k, 1] = p
        k += 1
    return out


def sample_configuration(n: int, d: int, seed: int) -> Multigraph:
    """Uniform d-regular configuration multigraph on ``n`` vertices."""
    if d < 3:
        raise ValueError(f"degree must be at least 3, got {d}")
    if n < 1:
        raise ValueError(f"need a positive vertex count, got {n}")
    if (n * d) % 2:
        raise ValueError(f"d*N must be even, got d={d}, N={n}")
    seed = int(seed)
    matching = _partner_draw(n * d, seed & 0xFFFFFFFF)
    owner = np.arange(n * d, dtype=np.int64) // d
    return Multigraph(n=n, owner=owner, matching=matching, d=d, seed=seed)


def complete_matching(n_half: int, pairs: np.ndarray, seed: int) -> np.ndarray:
    """Extend a partial matching of ``[n_half]`` to a uniform perfect one."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    used = np.zeros(n_half, dtype=bool)
    used[pairs.ravel()] = True
    free = np.flatnonzero(~used)
    if len(free) == 0:
        return pairs.copy()
    rest = _partner_draw(len(free), seed & 0xFFFFFFFF)
    return np.vstack([pairs, free[rest]])


def is_simple(g: Multigraph) -> bool:
    a = g.owner[g.matching[:, 0]]
    b = g.owner[g.matching[:, 1]]
    if np.any(a == b):
        return False
    key = np.minimum(a, b) * g.n + np.maximum(a, b)
    return len(np.unique(key)) == len(key)


@dataclass
class RootedBall:
    center: int
    radius: int
    distance: dict[int, int]
    edges: Counter = field(default_factory=Counter)

    @property
    def vertices(self) -> list[int]:
        return list(self.distance)

    def is_regular_tree_ball(self, d: int) -> bool:
        """True iff this ball is isomorphic to the radius-r ball of T_d."""
        if any(u == v or m > 1 for (u, v), m in self.edges.items()):
            return False
        if sum(self.edges.values()) != len(self.distance) - 1:
            return False
        deg = Counter()
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        for v, r in self.distance.items():
            want = d if r < self.radius else (1 if self.radius > 0 else 0)
            if deg[v] != want:
                return False
        return True


def extract_ball(g: Multigraph, v: int, r: int) -> RootedBall:
    """Breadth-first ball of radius ``r`` around ``v``; keeps every edge
    (with multiplicity, loops included) whose endpoints both lie in the ball."""
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} outside [0, {g.n})")
    if r < 0:
        raise ValueError("radius must be non-negative")
    dist = {v: 0}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        if dist[u] == r:
            continue
        for w in g.neighbours(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    offsets, half = g.incidence
    owner, partner = g.owner, g.partner
    edges = Counter()
    for u in dist:
        for h in half[offsets[u]:offsets[u + 1]].tolist():
            p = int(partner[h])
            w = int(owner[p])
            if h < p and w in dist:
                edges[(min(u, w), max(u, w))] += 1
    return RootedBall(center=v, radius=r, distance=dist, edges=edges)


def count_matchings(n_half: int) -> int:
    """(n_half - 1)!!, the number of perfect matchings of ``n_half`` points."""
    out = 1
    for k in range(n_half - 1, 0, -2):
        out *= k
    return out


def matching_key(matching: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Canonical hashable form of a matching (sorted pairs, each sorted)."""
    return tuple(sorted((min(a, b), max(a, b)) for a, b in np.asarray(matching).tolist()))


# small named graphs used by oracle checks
def isolated_vertex() -> Multigraph:
    return Multigraph.from_edges(1, [])


def complete_graph(n: int) -> Multigraph:
    return Multigraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Multigraph:
    return Multigraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Multigraph:
    return Multigraph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])
