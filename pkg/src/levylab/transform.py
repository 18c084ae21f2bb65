"""Discrete Lévy transform of Brownian paths and its iterates.

Two discretizations are provided:

* the left-point stochastic integral ``o[i+1] - o[i] = sign(p[i]) * (p[i+1] - p[i])``,
  which is exact at grid level and drives every downstream statistic;
* the Tanaka form ``|p| - L`` with an occupation-time local-time estimate,
  kept only as a cross-check.

Array kernels (``*_array``) operate on the last axis and accept any number of
leading batch dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .grid_rng import Path, TimeGrid


def sign_conv(x):
    """+1 where ``x > 0``, -1 elsewhere (so sign(0) = -1).

    This is the only place the convention at zero is fixed; flip it here
    for sensitivity runs.
    """
    if np.ndim(x) == 0:
        return 1 if x > 0 else -1
    return np.where(np.asarray(x) > 0, 1, -1).astype(np.int8)


def _cumsum_from_zero(increments: np.ndarray) -> np.ndarray:
    out = np.zeros(increments.shape[:-1] + (increments.shape[-1] + 1,))
    np.cumsum(increments, axis=-1, out=out[..., 1:])
    return out


def levy_step(values: np.ndarray, increments: np.ndarray):
    """One transform step. Returns ``(signs, new_increments, new_values)``."""
    signs = sign_conv(values[..., :-1])
    new_inc = signs * increments
    return signs, new_inc, _cumsum_from_zero(new_inc)


def levy_transform_integral(p: Path) -> Path:
    _, _, values = levy_step(p.values, p.increments)
    return Path(p.grid, values)


def iterate_array(base: np.ndarray, depth: int):
    """Iterates ``beta^0..beta^depth`` of a batch of paths.

    Returns ``values`` of shape ``(..., depth + 1, steps + 1)`` and ``signs`` of
    shape ``(..., depth, steps)`` with ``signs[..., n, i] = sign(beta^n at t_i)``.
    Increments are carried forward exactly (``inc^{n+1} = s^n * inc^n``) so that
    ``inc^n`` equals ``h^n * inc^0`` bit for bit.
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    base = np.asarray(base, dtype=float)
    lead, npts = base.shape[:-1], base.shape[-1]
    values = np.empty(lead + (depth + 1, npts))
    signs = np.empty(lead + (depth, npts - 1), dtype=np.int8)
    values[..., 0, :] = base
    inc = np.diff(base, axis=-1)
    for n in range(depth):
        s, inc, vals = levy_step(values[..., n, :], inc)
        signs[..., n, :] = s
        values[..., n + 1, :] = vals
    return values, signs


@dataclass(frozen=True)
class PathStack:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)

    @property
    def depth(self) -> int:
        return self.values.shape[0] - 1

    @property
    def base(self) -> Path:
        return Path(self.grid, self.values[0])

    @property
    def iterates(self) -> List[Path]:
        return [Path(self.grid, v) for v in self.values[1:]]

    def iterate(self, n: int) -> Path:
        return Path(self.grid, self.values[n])


def iterate_transforms(p: Path, depth: int) -> PathStack:
    values, signs = iterate_array(p.values, depth)
    return PathStack(p.grid, values, signs)


@dataclass(frozen=True)
class SignSeries:
    grid: TimeGrid
    h: np.ndarray = field(repr=False)
    order: int = 0


def sign_product_array(signs: np.ndarray, n: int) -> np.ndarray:
    """``prod_{k<n} signs[..., k, :]``; all ones for ``n = 0``."""
    if n == 0:
        return np.ones(signs.shape[:-2] + signs.shape[-1:], dtype=np.int8)
    return np.prod(signs[..., :n, :], axis=-2, dtype=np.int8)


def sign_product(stack: PathStack, n: int) -> SignSeries:
    if not 0 <= n <= stack.depth:
        raise ValueError(f"order n={n} outside [0, {stack.depth}]")
    return SignSeries(stack.grid, sign_product_array(stack.signs, n), n)


def rebuild_from_signs(stack: PathStack, n: int) -> Path:
    """``beta^n`` recomputed as the left sum of ``h^n * d(beta^0)``."""
    h = sign_product(stack, n).h
    return Path(stack.grid, _cumsum_from_zero(h * np.diff(stack.values[0])))


@dataclass(frozen=True)
class LocalTimeSeries:
    grid: TimeGrid
    L: np.ndarray = field(repr=False)
    eps: float = 0.0


def default_eps(grid: TimeGrid) -> float:
    return float(np.sqrt(grid.dt))


def local_time_array(values: np.ndarray, dt: float, eps: float) -> np.ndarray:
    if not eps > 0:
        raise ValueError(f"bandwidth eps must be positive, got {eps!r}")
    near = (np.abs(values[..., :-1]) <= eps).astype(float)
    return _cumsum_from_zero(near * (dt / (2.0 * eps)))


def local_time_occupation(p: Path, eps: float) -> LocalTimeSeries:
    return LocalTimeSeries(p.grid, local_time_array(p.values, p.grid.dt, eps), float(eps))


def levy_transform_tanaka(p: Path, eps: float) -> Path:
    lt = local_time_occupation(p, eps)
    return Path(p.grid, np.abs(p.values) - lt.L)
