"""Monte Carlo estimators on the regular tree.

All estimators are deterministic functions of their inputs and master seed.
Growth rates use unconditional means (extinct replicas count as 0).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from ._seeding import derive
from .engine import ProcessParams
from .tree import DEFAULT_BUDGET, tree_batch, two_process_histories
from ._seeding import replica_seeds


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _fit_slope(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(t, y, 1)[0])


def _bootstrap_weights(replicas: int, n_boot: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.multinomial(replicas, np.full(replicas, 1.0 / replicas), size=n_boot) / replicas


@dataclass
class GrowthEstimate:
    c_hat: float
    stderr: float
    window: tuple[float, float]
    replicas: int
    seed: int
    grid: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    severed: bool = False

    def summary(self) -> dict:
        return {"estimate": self.c_hat, "stderr": self.stderr, "window": list(self.window),
                "replicas": self.replicas, "seed": self.seed}

    def in_window(self) -> np.ndarray:
        lo, hi = self.window
        return (self.grid >= lo) & (self.grid <= hi)

    def sandwich_ratio(self) -> np.ndarray:
        """E|xi_t| e^{-c t} on the fit window."""
        m = self.in_window()
        return self.mean[m] * np.exp(-self.c_hat * self.grid[m])


def estimate_c_lambda(d: int, params: ProcessParams, horizon: float, replicas: int, seed: int,
                      points: int = 25, window: tuple[float, float] | None = None, severed: bool = False,
                      n_boot: int = 200, budget: int = DEFAULT_BUDGET, counts: np.ndarray | None = None
                      ) -> GrowthEstimate:
    """Least-squares slope of log E|xi_t| over ``window`` (default ``[T/2, T]``)."""
    if params.lam <= 0 and replicas < 2:
        raise ValueError("need replicas")
    grid = np.linspace(0.0, horizon, points)
    if window is None:
        window = (horizon / 2, horizon)
    if counts is None:
        counts, _, _ = tree_batch(params, grid, replicas, seed, d=d, severed=severed, budget=budget)
    xi = counts[:, :, 0].astype(np.float64)
    mean = xi.mean(axis=0)
    m = (grid >= window[0]) & (grid <= window[1])
    if np.any(mean[m] <= 0):
        raise ValueError("empirical mean reached 0 inside the fit window; lambda too small for this horizon")
    c_hat = _fit_slope(grid[m], np.log(mean[m]))
    W = _bootstrap_weights(replicas, n_boot, derive(seed, 1))
    boot = W @ xi[:, m]
    ok = np.all(boot > 0, axis=1)
    slopes = np.polyfit(grid[m], np.log(boot[ok]).T, 1)[0]
    stderr = float(np.std(slopes, ddof=1)) if ok.sum() > 1 else math.inf
    return GrowthEstimate(c_hat, stderr, (float(window[0]), float(window[1])), replicas, int(seed), grid, mean,
                          severed)


@dataclass
class SurvivalEstimate:
    p_hat: float
    lo: float
    hi: float
    horizon: float
    replicas: int
    seed: int

    def summary(self) -> dict:
        return {"estimate": self.p_hat, "stderr": math.sqrt(max(self.p_hat * (1 - self.p_hat), 0) / self.replicas),
                "ci": [self.lo, self.hi], "horizon": self.horizon, "replicas": self.replicas, "seed": self.seed}


def estimate_survival(d: int, params: ProcessParams, horizon: float, replicas: int, seed: int,
                      severed: bool = False, budget: int = DEFAULT_BUDGET) -> SurvivalEstimate:
    """Fraction of replicas alive at ``horizon`` with a Wilson 95% interval."""
    counts, _, _ = tree_batch(params, [horizon], replicas, seed, d=d, severed=severed, budget=budget)
    k = int(np.count_nonzero(counts[:, -1, 0] > 0))
    lo, hi = wilson(k, replicas)
    return SurvivalEstimate(k / replicas, lo, hi, float(horizon), replicas, int(seed))


@dataclass
class MomentEstimate:
    n: int
    grid: np.ndarray
    moments: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    growth_rate: float


def estimate_moments(d: int, params: ProcessParams, n_max: int, horizon: float, replicas: int, seed: int,
                     points: int = 25, window: tuple[float, float] | None = None, n_boot: int = 200,
                     budget: int = DEFAULT_BUDGET, counts: np.ndarray | None = None) -> list[MomentEstimate]:
    """Empirical ``E|xi_t|^n`` for ``n = 1..n_max`` with bootstrap 95% intervals
    and the fitted exponential growth rate of each moment."""
    if not 1 <= n_max <= 4:
        raise ValueError("n_max must be between 1 and 4")
    grid = np.linspace(0.0, horizon, points)
    if window is None:
        window = (horizon / 2, horizon)
    if counts is None:
        counts, _, _ = tree_batch(params, grid, replicas, seed, d=d, budget=budget)
    xi = counts[:, :, 0].astype(np.float64)
    W = _bootstrap_weights(replicas, n_boot, derive(seed, 2))
    m = (grid >= window[0]) & (grid <= window[1])
    out = []
    for n in range(1, n_max + 1):
        p = xi ** n
        mom = p.mean(axis=0)
        boot = W @ p
        lo, hi = np.percentile(boot, [2.5, 97.5], axis=0)
        with np.errstate(divide="ignore"):
            rel = np.where(mom > 0, (hi - lo) / mom, 0.0)
        if np.any(rel[m] > 1.0):
            warnings.warn(f"bootstrap interval of moment {n} wider than the estimate itself", RuntimeWarning)
        rate = _fit_slope(grid[m], np.log(mom[m])) if np.all(mom[m] > 0) else math.nan
        out.append(MomentEstimate(n, grid, mom, lo, hi, rate))
    return out


def moment_roots_ordered(moments: list[MomentEstimate]) -> np.ndarray:
    """Per grid time: whether (E|xi|^n)^{1/n} is non-decreasing in n."""
    roots = np.array([m.moments ** (1.0 / m.n) for m in moments])
    return np.all(np.diff(roots, axis=0) >= -1e-12 * np.abs(roots[1:]), axis=0)


@dataclass
class TailEstimate:
    t: np.ndarray
    freq: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    alive: np.ndarray
    threshold: np.ndarray


def left_tail(d: int, params: ProcessParams, delta: float, t_grid, replicas: int, seed: int, c_hat: float,
              severed: bool = False, use_pioneers: bool = False, budget: int = DEFAULT_BUDGET,
              counts: np.ndarray | None = None) -> TailEstimate:
    """P(log|zeta_t| <= c t - t^delta | alive) per grid time, with Wilson intervals.

    ``zeta`` is the infected set, or the pioneer set when ``use_pioneers``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if counts is None:
        counts, _, _ = tree_batch(params, t_grid, replicas, seed, d=d, severed=severed, budget=budget)
    col = 2 if use_pioneers else 0
    thr = c_hat * t_grid - t_grid ** delta
    freq, lo, hi, alive = [], [], [], []
    for j in range(len(t_grid)):
        live = counts[:, j, 0] > 0
        z = counts[live, j, col].astype(np.float64)
        with np.errstate(divide="ignore"):
            k = int(np.count_nonzero(np.log(z) <= thr[j]))
        n = int(live.sum())
        freq.append(k / n if n else math.nan)
        a, b = wilson(k, n)
        lo.append(a)
        hi.append(b)
        alive.append(n)
    return TailEstimate(t_grid, np.array(freq), np.array(lo), np.array(hi), np.array(alive), thr)


@dataclass
class IntersectionEstimate:
    grid: np.ndarray
    intersection: np.ndarray
    union_single: np.ndarray
    stderr: np.ndarray

    def bound(self, c_hat: float) -> np.ndarray:
        return 2 * (2 + 1 / c_hat) * np.exp(c_hat / 2 * self.grid)


def history_intersection(d: int, params: ProcessParams, horizon: float, replicas: int, seed: int,
                         points: int = 13, budget: int = DEFAULT_BUDGET) -> IntersectionEstimate:
    """Mean size of the intersection of two independent histories on one tree."""
    grid = np.linspace(0.0, horizon, points)
    data = np.empty((replicas, points, 3), dtype=np.float64)
    for i, s in enumerate(replica_seeds(seed, 0, replicas)):
        data[i] = two_process_histories(params, grid, int(s), d=d, budget=budget)
    inter = data[:, :, 2]
    union = data[:, :, :2].mean(axis=2)
    return IntersectionEstimate(grid, inter.mean(axis=0), union.mean(axis=0),
                                inter.std(axis=0, ddof=1) / math.sqrt(replicas))
