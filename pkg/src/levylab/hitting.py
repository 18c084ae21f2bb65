"""Grid detection of the stopping time tau_{r,C} at finite iteration depth.

An iterate "vanishes" on interval ``[t_i, t_{i+1}]`` when its endpoint values
have product <= 0. The lower iterates must stay strictly above the barrier
``C * sqrt((1 - t_{i+1})_+)`` at *both* endpoints of that interval. The hit time
is the right endpoint ``t_{i+1}``; only intervals with ``t_{i+1} > r`` count.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid_rng import Path, TimeGrid
from .transform import PathStack


@dataclass(frozen=True)
class TauResult:
    hit: bool
    tau_hat: float
    n_star: Optional[int] = None

    @property
    def censored(self) -> bool:
        return not self.hit


def zero_crossing_intervals(p: Path, from_time: float = 0.0) -> np.ndarray:
    """Indices ``i`` with ``t_i >= from_time`` and ``p[i] * p[i+1] <= 0``."""
    grid = p.grid
    if not 0 <= from_time < grid.horizon:
        raise ValueError(f"from_time must lie in [0, {grid.horizon}), got {from_time!r}")
    v = p.values
    cross = v[:-1] * v[1:] <= 0
    cross &= grid.times[:-1] >= from_time - 1e-9 * grid.dt
    return np.flatnonzero(cross)


def first_scanned_interval(grid: TimeGrid, r: float) -> int:
    """Smallest interval index ``i`` with ``t_{i+1} > r`` (up to round-off)."""
    return int(np.searchsorted(grid.times[1:], r + 1e-9 * grid.dt, side="right"))


def barrier(grid: TimeGrid, C: float) -> np.ndarray:
    """``C * sqrt((1 - t_{i+1})_+)`` for every interval ``i``."""
    return C * np.sqrt(np.clip(1.0 - grid.times[1:], 0.0, None))


@dataclass
class CrossingEvents:
    """Every grid zero-crossing of iterates 1..N over a batch of stacks.

    ``guard[j]`` is the smallest endpoint modulus of the iterates below
    ``order[j]`` on interval ``interval[j]``; a crossing counts as a hit when
    ``guard`` exceeds the barrier.
    """
    batch: int
    depth: int
    path: np.ndarray
    order: np.ndarray
    interval: np.ndarray
    guard: np.ndarray


def crossing_events(values: np.ndarray) -> CrossingEvents:
    """Extract crossing events from stacked iterates of shape ``(B, N+1, steps+1)``."""
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[None]
    B, depth = values.shape[0], values.shape[1] - 1
    if depth < 1:
        raise ValueError("tau detection needs depth >= 1")
    lower = np.abs(values[:, :-1])
    guard = np.minimum(lower[..., :-1], lower[..., 1:])
    np.minimum.accumulate(guard, axis=1, out=guard)
    upper = values[:, 1:]
    b, m, i = np.nonzero(upper[..., :-1] * upper[..., 1:] <= 0)
    return CrossingEvents(B, depth, b, m + 1, i, guard[b, m, i])


def first_hits(events: CrossingEvents, grid: TimeGrid, r: float, C: float,
               depths: Sequence[int]):
    """First hit per stack for each truncation depth in ``depths``.

    Returns ``{N: (hit, interval, n_star)}`` with arrays of length ``events.batch``;
    ``interval`` and ``n_star`` are -1 where there is no hit.
    """
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r!r}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C!r}")
    if abs(grid.horizon - 1.0) > 1e-12:
        raise ValueError("tau detection assumes horizon = 1")
    ok = (events.interval >= first_scanned_interval(grid, r))
    ok &= events.guard > barrier(grid, C)[events.interval]
    stride = events.depth + 1
    key = events.interval.astype(np.int64) * stride + events.order
    sentinel = np.iinfo(np.int64).max
    out = {}
    for N in depths:
        if not 1 <= N <= events.depth:
            raise ValueError(f"depth N={N} outside [1, {events.depth}]")
        sel = ok & (events.order <= N)
        best = np.full(events.batch, sentinel, dtype=np.int64)
        np.minimum.at(best, events.path[sel], key[sel])
        hit = best != sentinel
        out[N] = (hit,
                  np.where(hit, best // stride, -1),
                  np.where(hit, best % stride, -1))
    return out


def tau_estimate(stack: PathStack, r: float, C: float) -> TauResult:
    if stack.depth < 1:
        raise ValueError("tau_estimate needs a stack of depth >= 1")
    hit, interval, n_star = first_hits(
        crossing_events(stack.values), stack.grid, r, C, [stack.depth])[stack.depth]
    if hit[0]:
        return TauResult(True, float(stack.grid.times[interval[0] + 1]), int(n_star[0]))
    return TauResult(False, stack.grid.horizon, None)
