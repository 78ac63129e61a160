"""Regular and uneven time sampling on an underlying grid of step ``delta_t``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NotOnGridError
from .rng import as_generator

GRID_TOLERANCE = 1e-6


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    """Observed instants ``t_j = indices[j] * delta_t`` on a grid of ``n_grid`` points."""

    delta_t: float
    n_grid: int
    indices: np.ndarray

    def __post_init__(self):
        idx = _frozen(self.indices, np.int64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "n_grid", int(self.n_grid))
        object.__setattr__(self, "delta_t", float(self.delta_t))
        if not (np.isfinite(self.delta_t) and self.delta_t > 0):
            raise InvalidArgumentError(f"delta_t must be > 0, got {self.delta_t}")
        if self.n_grid < 1:
            raise InvalidArgumentError(f"n_grid must be positive, got {self.n_grid}")
        if idx.ndim != 1 or idx.size < 2:
            raise InvalidArgumentError("a sampling scheme needs at least 2 instants")
        if np.any(np.diff(idx) <= 0):
            raise InvalidArgumentError("indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.n_grid:
            raise InvalidArgumentError(f"indices must lie in [0, {self.n_grid - 1}]")

    @classmethod
    def regular(cls, n_grid: int, delta_t: float = 1.0) -> "SamplingScheme":
        return cls(delta_t, n_grid, np.arange(n_grid))

    @property
    def n(self) -> int:
        return int(self.indices.size)

    @property
    def times(self) -> np.ndarray:
        return self.indices * self.delta_t

    @property
    def is_even(self) -> bool:
        return self.n == self.n_grid

    def __eq__(self, other):
        if not isinstance(other, SamplingScheme):
            return NotImplemented
        return (
            self.delta_t == other.delta_t
            and self.n_grid == other.n_grid
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.delta_t, self.n_grid, self.indices.tobytes()))


@dataclass(frozen=True, eq=False)
class TimeSeries:
    scheme: SamplingScheme
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _frozen(self.values, np.float64)
        object.__setattr__(self, "values", v)
        if v.shape != (self.scheme.n,):
            raise InvalidArgumentError(
                f"expected {self.scheme.n} values for this scheme, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("time series values must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.scheme.times


def make_uneven(n_grid: int, n_keep: int, rng=None, delta_t: float = 1.0) -> SamplingScheme:
    """Keep a uniform random ``n_keep``-subset of the grid, sorted ascending.

    The subset is drawn by a partial Fisher-Yates shuffle, so a given
    generator state always yields the same scheme.
    """
    if not 2 <= n_keep <= n_grid:
        raise InvalidArgumentError(f"need 2 <= n_keep <= n_grid, got n_keep={n_keep}, n_grid={n_grid}")
    gen = as_generator(rng)
    pool = np.arange(n_grid)
    for i in range(n_keep):
        j = int(gen.integers(i, n_grid))
        pool[i], pool[j] = pool[j], pool[i]
    return SamplingScheme(delta_t, n_grid, np.sort(pool[:n_keep]))


def validate_on_grid(times, delta_t: float) -> SamplingScheme:
    """Map real instants onto grid indices, rejecting anything off-grid."""
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size < 2:
        raise InvalidArgumentError("need at least 2 time instants")
    if not delta_t > 0:
        raise InvalidArgumentError(f"delta_t must be > 0, got {delta_t}")
    if np.any(np.diff(t) <= 0):
        j = int(np.argmax(np.diff(t) <= 0)) + 1
        raise InvalidArgumentError(f"times must be strictly increasing (sample {j})")
    ratio = t / delta_t
    idx = np.round(ratio)
    off = np.abs(ratio - idx) > GRID_TOLERANCE
    if np.any(off):
        j = int(np.argmax(off))
        raise NotOnGridError(j, float(t[j]), delta_t)
    idx = idx.astype(np.int64)
    if idx[0] < 0:
        raise InvalidArgumentError("times must be nonnegative")
    return SamplingScheme(delta_t, int(idx[-1]) + 1, idx)
