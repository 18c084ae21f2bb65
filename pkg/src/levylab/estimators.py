"""Closed-form oracles and Monte Carlo estimators.

All Monte Carlo estimators stream over fixed path chunks and merge
(count, sum, sum of squares) accumulators in chunk order, which keeps every
result a deterministic function of ``(grid, seeds, paths, chunk)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .grid_rng import SeedSpec, TimeGrid, quadratic_variation, sample_paths
from .hitting import crossing_events, first_hits
from .parallel import DEFAULT_CHUNK, chunk_ranges, map_chunks
from .transform import default_eps, iterate_array, levy_step, local_time_array


@dataclass(frozen=True)
class EstimateWithCI:
    value: float
    std_error: float
    n_samples: int
    label: str = ""

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class Moments:
    """Associative accumulator for a vector of per-path statistics."""
    count: int
    total: np.ndarray
    total_sq: np.ndarray

    @classmethod
    def of(cls, samples: np.ndarray) -> "Moments":
        samples = np.asarray(samples, dtype=float)
        return cls(samples.shape[0], samples.sum(axis=0), (samples * samples).sum(axis=0))

    def merge(self, other: "Moments") -> "Moments":
        return Moments(self.count + other.count, self.total + other.total,
                       self.total_sq + other.total_sq)

    @property
    def mean(self) -> np.ndarray:
        return self.total / self.count

    @property
    def std_error(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.mean)
        var = (self.total_sq - self.count * self.mean**2) / (self.count - 1)
        return np.sqrt(np.clip(var, 0.0, None) / self.count)

    def estimate(self, j, label="") -> EstimateWithCI:
        return EstimateWithCI(float(self.mean[j]), float(self.std_error[j]), self.count, label)


def merge_all(parts: Iterable[Moments]) -> Moments:
    parts = list(parts)
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc


def binomial_estimate(hits: int, n: int, label: str = "") -> EstimateWithCI:
    p = hits / n
    return EstimateWithCI(p, math.sqrt(p * (1.0 - p) / n), n, label)


# --------------------------------------------------------------------------
# closed forms

def _sup_tail_theta(C: float, tol: float = 1e-12) -> float:
    total, k = 0.0, 0
    while True:
        term = (-1) ** k / (2 * k + 1) * math.exp(-((2 * k + 1) ** 2) * math.pi**2 / (8 * C * C))
        total += term
        if abs(term) < tol:
            break
        k += 1
    return 1.0 - 4.0 / math.pi * total


def _sup_tail_images(C: float, tol: float = 1e-300) -> float:
    # 4 * sum_j (-1)^j P(Z > (2j+1) C)
    total, j = 0.0, 0
    while True:
        term = (-1) ** j * special.ndtr(-(2 * j + 1) * C)
        total += term
        if abs(term) < tol or abs(term) < 1e-17 * abs(total):
            break
        j += 1
    return float(4.0 * total)


def sup_abs_tail_analytic(C: float) -> float:
    """P(sup_{0<=s<=1} |B_s| > C) for standard Brownian motion.

    Uses the eigenfunction (theta) series for C < 1 and the reflection
    (image) series otherwise; each converges fast in its own range and the
    image series avoids cancellation in ``1 - P(sup < C)`` for large C.
    """
    if not C > 0:
        raise ValueError(f"C must be positive, got {C!r}")
    tail = _sup_tail_theta(C) if C < 1.0 else _sup_tail_images(C)
    return float(min(max(tail, 0.0), 1.0))


def sign_cov_closed_form(r: float) -> float:
    """E[sign(B_r) sign(B_1)] = (2/pi) arcsin(sqrt(r))."""
    if not 0 < r <= 1:
        raise ValueError(f"r must lie in (0, 1], got {r!r}")
    return 2.0 / math.pi * math.asin(math.sqrt(r))


def ks_test(samples, variance: float = 1.0) -> Tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against N(0, variance).

    The p-value uses the asymptotic Kolmogorov distribution of ``sqrt(n) D``.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("ks_test needs at least one sample")
    if not variance > 0:
        raise ValueError("variance must be positive")
    cdf = special.ndtr(x / math.sqrt(variance))
    ranks = np.arange(1, n + 1) / n
    d = float(max(np.max(ranks - cdf), np.max(cdf - (ranks - 1.0 / n))))
    return d, float(special.kolmogorov(math.sqrt(n) * d))


# --------------------------------------------------------------------------
# sign covariance E[h^n_r h^n_1]

@dataclass
class CovarianceSeries:
    r: float
    entries: Dict[int, EstimateWithCI] = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return max(self.entries)


def snap_r(grid: TimeGrid, r: float) -> int:
    """Grid index used for h^n_r; kept at most at the last left endpoint."""
    return min(grid.snap(r), grid.steps - 1)


def sign_covariance_samples(signs: np.ndarray, j_r: int) -> np.ndarray:
    """Per-path ``h^n_r h^n_1`` for n = 1..depth, shape ``(B, depth)``.

    h^n_1 is read at the left endpoint of the final interval.
    """
    cols = signs[..., [j_r, -1]].astype(np.int64)
    h = np.cumprod(cols, axis=-2)
    return h[..., 0] * h[..., 1]


def _cov_chunk(task, grid, seeds, n_max, cols):
    lo, hi = task
    base = sample_paths(grid, seeds, range(lo, hi))
    _, signs = iterate_array(base, n_max)
    return Moments.of(np.concatenate(
        [sign_covariance_samples(signs, j) for j in cols], axis=1))


def estimate_sign_covariances(rs: Sequence[float], n_max: int, paths: int, grid: TimeGrid,
                              seeds: SeedSpec, workers: int = 1,
                              chunk: int = DEFAULT_CHUNK) -> List[CovarianceSeries]:
    """One :class:`CovarianceSeries` per r, all computed on the same driving paths."""
    if paths < 1:
        raise ValueError(f"paths must be >= 1, got {paths}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    cols = [snap_r(grid, r) for r in rs]
    out = [CovarianceSeries(float(grid.times[j])) for j in cols]
    for series in out:
        series.entries[0] = EstimateWithCI(1.0, 0.0, paths, "cov")
    if n_max == 0:
        return out
    fn = partial(_cov_chunk, grid=grid, seeds=seeds, n_max=n_max, cols=cols)
    acc = merge_all(map_chunks(fn, chunk_ranges(paths, chunk), workers))
    for k, series in enumerate(out):
        for n in range(1, n_max + 1):
            series.entries[n] = acc.estimate(k * n_max + n - 1, "cov")
    return out


def estimate_sign_covariance(r: float, n_max: int, paths: int, grid: TimeGrid,
                             seeds: SeedSpec, workers: int = 1,
                             chunk: int = DEFAULT_CHUNK) -> CovarianceSeries:
    """Monte Carlo E[h^n_r h^n_1] for n = 0..n_max; r is snapped to the grid."""
    return estimate_sign_covariances([r], n_max, paths, grid, seeds, workers, chunk)[0]


# --------------------------------------------------------------------------
# P(tau_{r,C,N} < 1)

@dataclass
class TauScan:
    cells: Dict[Tuple[float, float, int], EstimateWithCI] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.cells[key]


def tau_hit_indicators(values: np.ndarray, grid: TimeGrid, rs, Cs, Ns) -> Dict:
    """``{(r, C, N): bool array over the batch}`` from one stack batch at depth max(Ns)."""
    events = crossing_events(values)
    out = {}
    for r in rs:
        for C in Cs:
            for N, (hit, _, _) in first_hits(events, grid, r, C, Ns).items():
                out[(r, C, N)] = hit
    return out


def _tau_chunk(task, grid, seeds, rs, Cs, Ns):
    lo, hi = task
    base = sample_paths(grid, seeds, range(lo, hi))
    values, _ = iterate_array(base, max(Ns))
    hits = tau_hit_indicators(values, grid, rs, Cs, Ns)
    return {key: int(h.sum()) for key, h in hits.items()}


def _check_tau_params(rs, Cs, Ns):
    if not rs or not Cs or not Ns:
        raise ValueError("rs, Cs and Ns must all be non-empty")
    for r in rs:
        if not 0 < r < 1:
            raise ValueError(f"r must lie in (0, 1), got {r!r}")
    for C in Cs:
        if not C > 0:
            raise ValueError(f"C must be positive, got {C!r}")
    for N in Ns:
        if N < 1:
            raise ValueError(f"N must be >= 1, got {N!r}")


def estimate_tau_scan(rs: Sequence[float], Cs: Sequence[float], Ns: Sequence[int],
                      paths: int, grid: TimeGrid, seeds: SeedSpec, workers: int = 1,
                      chunk: int = DEFAULT_CHUNK) -> TauScan:
    """Fraction of paths with a tau hit, on driving paths shared by every cell."""
    _check_tau_params(rs, Cs, Ns)
    rs, Cs, Ns = [float(r) for r in rs], [float(c) for c in Cs], sorted({int(n) for n in Ns})
    fn = partial(_tau_chunk, grid=grid, seeds=seeds, rs=rs, Cs=Cs, Ns=Ns)
    counts: Dict = {}
    for part in map_chunks(fn, chunk_ranges(paths, chunk), workers):
        for key, c in part.items():
            counts[key] = counts.get(key, 0) + c
    return TauScan({key: binomial_estimate(c, paths, "p_tau_lt_1") for key, c in counts.items()})


# --------------------------------------------------------------------------
# sup tail by simulation

def _sup_chunk(task, grid, seeds, Cs):
    lo, hi = task
    peak = np.abs(sample_paths(grid, seeds, range(lo, hi))).max(axis=1)
    return Moments.of(np.stack([peak > C for C in Cs], axis=1))


def estimate_sup_tail(Cs: Sequence[float], paths: int, grid: TimeGrid, seeds: SeedSpec,
                      workers: int = 1, chunk: int = DEFAULT_CHUNK) -> Dict[float, EstimateWithCI]:
    """Grid estimate of P(max_i |beta(t_i)| > C); biased low against the continuous sup."""
    Cs = [float(c) for c in Cs]
    fn = partial(_sup_chunk, grid=grid, seeds=seeds, Cs=Cs)
    acc = merge_all(map_chunks(fn, chunk_ranges(paths, chunk), workers))
    return {C: acc.estimate(j, "sup_tail_mc") for j, C in enumerate(Cs)}


# --------------------------------------------------------------------------
# measure preservation and quadratic variation

def _terminal_chunk(task, grid, seeds, depth):
    lo, hi = task
    base = sample_paths(grid, seeds, range(lo, hi))
    values, _ = iterate_array(base, depth)
    return values[:, :, -1], quadratic_variation(values)


def terminal_values(depth: int, paths: int, grid: TimeGrid, seeds: SeedSpec,
                    workers: int = 1, chunk: int = DEFAULT_CHUNK):
    """Terminal values ``(paths, depth+1)`` and per-path quadratic variations of every iterate."""
    fn = partial(_terminal_chunk, grid=grid, seeds=seeds, depth=depth)
    parts = map_chunks(fn, chunk_ranges(paths, chunk), workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# --------------------------------------------------------------------------
# Tanaka vs integral form

def _tanaka_chunk(task, fine, seeds, factors, eps_scale):
    lo, hi = task
    base = sample_paths(fine, seeds, range(lo, hi))
    gaps = []
    for f in factors:
        coarse = base[:, ::f]
        dt = fine.dt * f
        eps = eps_scale * math.sqrt(dt)
        _, _, integral = levy_step(coarse, np.diff(coarse, axis=1))
        tanaka = np.abs(coarse[:, -1]) - local_time_array(coarse, dt, eps)[:, -1]
        gaps.append(np.abs(tanaka - integral[:, -1]))
    return Moments.of(np.stack(gaps, axis=1))


def tanaka_gap(steps_list: Sequence[int], paths: int, seeds: SeedSpec, horizon: float = 1.0,
               eps_scale: float = 1.0, workers: int = 1,
               chunk: int = DEFAULT_CHUNK) -> Dict[int, EstimateWithCI]:
    """Mean terminal |tanaka - integral| at each resolution, eps = eps_scale * sqrt(dt).

    Coarser grids subsample the finest path, so every resolution sees the
    same Brownian trajectories.
    """
    steps_list = sorted(int(s) for s in steps_list)
    finest = steps_list[-1]
    if any(finest % s for s in steps_list):
        raise ValueError("every resolution must divide the finest one")
    fine = TimeGrid(horizon, finest)
    factors = [finest // s for s in steps_list]
    fn = partial(_tanaka_chunk, fine=fine, seeds=seeds, factors=factors, eps_scale=eps_scale)
    acc = merge_all(map_chunks(fn, chunk_ranges(paths, chunk), workers))
    return {s: acc.estimate(j, "tanaka_gap") for j, s in enumerate(steps_list)}


def mean_local_time(paths: int, grid: TimeGrid, seeds: SeedSpec, eps: Optional[float] = None,
                    workers: int = 1, chunk: int = DEFAULT_CHUNK) -> EstimateWithCI:
    eps = default_eps(grid) if eps is None else eps
    fn = partial(_local_time_chunk, grid=grid, seeds=seeds, eps=eps)
    acc = merge_all(map_chunks(fn, chunk_ranges(paths, chunk), workers))
    return acc.estimate(0, "local_time")


def _local_time_chunk(task, grid, seeds, eps):
    lo, hi = task
    base = sample_paths(grid, seeds, range(lo, hi))
    return Moments.of(local_time_array(base, grid.dt, eps)[:, -1:])


# --------------------------------------------------------------------------
# the bound |E h^n_r h^n_1| <= P(tau = 1) + P(sup |beta| > C)

@dataclass(frozen=True)
class BoundReport:
    r: float
    C: float
    N: int
    n: int
    cov: float
    p_tau_eq_1: float
    sup_tail: float
    slack: float
    passed: bool

    @property
    def rhs(self) -> float:
        return self.p_tau_eq_1 + self.sup_tail


def mixing_bound_check(cov: CovarianceSeries, tau: EstimateWithCI, sup_tail: float,
                       r: float, C: float, N: int, n: Optional[int] = None,
                       r_tol: float = 1e-9) -> BoundReport:
    """Check ``|cov_n| <= (1 - P(tau<1)) + sup_tail + 3 * combined SE`` at the largest n.

    ``r`` is the tau cell's r; it must agree with the covariance's (snapped) r
    within ``r_tol``.
    """
    if abs(cov.r - r) > r_tol:
        raise ValueError(f"covariance r={cov.r} does not match tau r={r}")
    n = cov.n_max if n is None else n
    c = cov.entries[n]
    slack = 3.0 * math.hypot(c.std_error, tau.std_error)
    p_eq_1 = 1.0 - tau.value
    passed = abs(c.value) <= p_eq_1 + sup_tail + slack
    return BoundReport(r, C, N, n, c.value, p_eq_1, sup_tail, slack, bool(passed))
