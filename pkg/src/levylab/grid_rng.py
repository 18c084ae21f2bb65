"""Uniform time grids and reproducible Brownian path sampling.

Every path index owns an independent Philox stream keyed by
``(seed, separator, path_index)``, so the order in which paths are drawn,
or how they are split between workers, never changes their values.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    horizon: float = 1.0
    steps: int = 4096

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.steps + 1) * self.dt
        t[-1] = self.horizon
        return t

    def snap(self, t: float) -> int:
        """Index of the grid point nearest to ``t``."""
        return int(np.clip(np.rint(t / self.dt), 0, self.steps))


def make_grid(horizon: float = 1.0, steps: int = 4096) -> TimeGrid:
    return TimeGrid(float(horizon), steps)


@dataclass(frozen=True)
class Path:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.steps + 1,):
            raise ValueError(
                f"path needs {self.grid.steps + 1} values, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    separator: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def separator_key(self) -> int:
        digest = hashlib.blake2b(self.separator.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def generator(self, path_index: int) -> np.random.Generator:
        if path_index < 0:
            raise ValueError("path_index must be non-negative")
        ss = np.random.SeedSequence([int(self.seed), self.separator_key, int(path_index)])
        return np.random.Generator(np.random.Philox(ss))


def sample_increments(grid: TimeGrid, seeds: SeedSpec, path_index: int) -> np.ndarray:
    return seeds.generator(path_index).standard_normal(grid.steps) * np.sqrt(grid.dt)


def sample_path(grid: TimeGrid, seeds: SeedSpec, path_index: int) -> Path:
    values = np.zeros(grid.steps + 1)
    np.cumsum(sample_increments(grid, seeds, path_index), out=values[1:])
    return Path(grid, values)


def sample_paths(grid: TimeGrid, seeds: SeedSpec, indices: Iterable[int]) -> np.ndarray:
    """Brownian paths for ``indices`` stacked row-wise, shape ``(len(indices), steps + 1)``.

    Row ``j`` is bit-identical to ``sample_path(grid, seeds, indices[j]).values``.
    """
    indices = list(indices)
    out = np.zeros((len(indices), grid.steps + 1))
    for row, idx in enumerate(indices):
        out[row, 1:] = sample_increments(grid, seeds, idx)
    np.cumsum(out[:, 1:], axis=1, out=out[:, 1:])
    return out


def quadratic_variation(values: np.ndarray) -> np.ndarray:
    """Sum of squared increments along the last axis."""
    inc = np.diff(values, axis=-1)
    return np.einsum("...i,...i->...", inc, inc)
