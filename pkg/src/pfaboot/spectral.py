"""Schuster periodograms on uneven sampling, training averages, standardization.

All periodograms here are direct non-uniform DFTs. The K x N matrices of
``cos`` and ``sin`` of ``2 pi nu_k t_j`` are built once per (scheme, grid)
pair and reused read-only, which turns the bootstrap inner loop into one
matrix product per batch of series.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegenerateDenominatorError, InvalidArgumentError
from .sampling import SamplingScheme, TimeSeries

PLAIN = "plain"
AVERAGED = "averaged"
STANDARDIZED = "standardized"
PSD = "psd"


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    frequencies: np.ndarray

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=np.float64)
        f.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        if f.ndim != 1 or f.size < 1:
            raise InvalidArgumentError("frequency grid must be a nonempty vector")
        if not f[0] > 0:
            raise InvalidArgumentError("frequencies must be strictly positive")
        if np.any(np.diff(f) <= 0):
            raise InvalidArgumentError("frequencies must be strictly increasing")

    @classmethod
    def default(cls, n_grid: int, delta_t: float = 1.0, oversample: int = 1) -> "FrequencyGrid":
        """``nu_k = k / (n_grid * delta_t * oversample)`` up to the grid Nyquist."""
        if int(oversample) != oversample or oversample < 1:
            raise InvalidArgumentError(f"oversample must be an integer >= 1, got {oversample}")
        oversample = int(oversample)
        k = np.arange(1, (n_grid * oversample) // 2 + 1)
        if k.size == 0:
            raise InvalidArgumentError("grid too short for any positive frequency")
        return cls(k / (n_grid * delta_t * oversample))

    @classmethod
    def for_scheme(cls, scheme: SamplingScheme, oversample: int = 1) -> "FrequencyGrid":
        return cls.default(scheme.n_grid, scheme.delta_t, oversample)

    @property
    def k(self) -> int:
        return int(self.frequencies.size)

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return np.array_equal(self.frequencies, other.frequencies)

    def __hash__(self):
        return hash(self.frequencies.tobytes())


@dataclass(frozen=True, eq=False)
class Periodogram:
    grid: FrequencyGrid
    ordinates: np.ndarray = field(repr=False)
    flavor: str = PLAIN
    L: int | None = None

    def __post_init__(self):
        o = np.array(self.ordinates, dtype=np.float64)
        o.setflags(write=False)
        object.__setattr__(self, "ordinates", o)
        if o.shape != (self.grid.k,):
            raise InvalidArgumentError("ordinates must match the frequency grid")
        if not np.all(np.isfinite(o)) or np.any(o < 0):
            raise InvalidArgumentError("ordinates must be finite and nonnegative")
        if self.flavor in (AVERAGED, STANDARDIZED) and (self.L is None or self.L < 1):
            raise InvalidArgumentError(f"{self.flavor} periodogram must record L >= 1")

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies


class Kernel:
    """Precomputed ``[cos | sin]`` of ``2 pi nu_k t_j``, shape (N, 2K)."""

    def __init__(self, times, frequencies):
        t = np.asarray(times, dtype=np.float64)
        nu = np.asarray(frequencies, dtype=np.float64)
        # reduce the phase to [0, 1) cycles before scaling by 2 pi
        phase = 2.0 * np.pi * np.mod(np.outer(t, nu), 1.0)
        self.n = t.size
        self.k = nu.size
        self.matrix = np.ascontiguousarray(np.hstack([np.cos(phase), np.sin(phase)]))
        self.matrix.setflags(write=False)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Periodogram ordinates for one series (N,) or a batch (m, N)."""
        y = np.asarray(values, dtype=np.float64) @ self.matrix
        re = y[..., : self.k]
        im = y[..., self.k :]
        return (re * re + im * im) / self.n


@lru_cache(maxsize=32)
def kernel_for(scheme: SamplingScheme, grid: FrequencyGrid) -> Kernel:
    return Kernel(scheme.times, grid.frequencies)


def schuster(values, times, frequencies) -> np.ndarray:
    """Raw ``(1/N) |sum_j x_j exp(-i 2 pi nu t_j)|^2`` for arbitrary inputs.

    No grid or scheme validation, so it accepts ``nu = 0`` or a single sample.
    """
    return Kernel(times, frequencies)(values)


def periodogram(x: TimeSeries, grid: FrequencyGrid) -> Periodogram:
    return Periodogram(grid, kernel_for(x.scheme, grid)(x.values), PLAIN)


def _common_scheme(series: Sequence[TimeSeries]) -> SamplingScheme:
    if len(series) < 1:
        raise InvalidArgumentError("need at least one training series")
    scheme = series[0].scheme
    for i, s in enumerate(series[1:], start=1):
        if s.scheme != scheme:
            raise InvalidArgumentError(f"training series {i} uses a different sampling scheme")
    return scheme


def averaged_periodogram(train: Sequence[TimeSeries], grid: FrequencyGrid) -> Periodogram:
    scheme = _common_scheme(train)
    values = np.stack([s.values for s in train])
    ordinates = kernel_for(scheme, grid)(values).mean(axis=0)
    return Periodogram(grid, ordinates, AVERAGED, len(train))


def standardize(num: Periodogram, den: Periodogram) -> Periodogram:
    if num.grid != den.grid:
        raise InvalidArgumentError("numerator and denominator use different frequency grids")
    if den.flavor != AVERAGED:
        raise InvalidArgumentError("denominator must be an averaged periodogram")
    if np.any(den.ordinates <= 0):
        k = int(np.argmax(den.ordinates <= 0))
        raise DegenerateDenominatorError(
            f"averaged periodogram vanishes at nu={den.frequencies[k]!r} (index {k})"
        )
    return Periodogram(num.grid, num.ordinates / den.ordinates, STANDARDIZED, den.L)


def standardized_batch(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Row-wise ratio for batched ordinates; same guard as :func:`standardize`."""
    if np.any(den <= 0):
        raise DegenerateDenominatorError("averaged periodogram has a zero ordinate")
    return num / den


def max_stat(p: Periodogram) -> tuple[float, int]:
    """Return ``(max_k P~(nu_k), argmax)``; ties go to the lowest index."""
    k = int(np.argmax(p.ordinates))
    return float(p.ordinates[k]), k
