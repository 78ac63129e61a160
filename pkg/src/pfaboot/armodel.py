"""Autoregressive noise models: PSD, simulation, and Bridge-criterion fitting.

Sign convention follows the PSD denominator ``1 + sum_j c_j exp(-2 pi i j nu)``,
so the time recursion is ``x_t = -sum_j c_j x_{t-j} + eps_t``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal, stats

from .errors import FitFailureError, InsufficientLagCoverageError, InvalidArgumentError
from .rng import as_generator
from .sampling import SamplingScheme, TimeSeries
from .spectral import PSD, FrequencyGrid, Periodogram, _common_scheme

STATIONARITY_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class ARModel:
    order: int
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    innovation_variance: float = 1.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "innovation_variance", float(self.innovation_variance))
        if self.order < 0 or c.size != self.order:
            raise InvalidArgumentError(f"order {self.order} does not match {c.size} coefficients")
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("AR coefficients must be finite")
        s2 = self.innovation_variance
        if not (np.isfinite(s2) and s2 > 0):
            raise InvalidArgumentError(f"innovation variance must be finite and > 0, got {s2}")
        if self.order and np.min(np.abs(self.roots())) <= 1 + STATIONARITY_MARGIN:
            raise InvalidArgumentError("AR model is not stationary (root on or inside the unit circle)")

    @classmethod
    def from_coeffs(cls, coeffs, innovation_variance: float = 1.0) -> "ARModel":
        c = np.asarray(coeffs, dtype=np.float64).reshape(-1)
        # trailing zeros do not raise the order
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:0]
        return cls(c.size, c, innovation_variance)

    def roots(self) -> np.ndarray:
        """Roots in z of ``1 + sum_j c_j z^j``."""
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        return np.roots(np.r_[self.coeffs[::-1], 1.0])

    @property
    def filter_denominator(self) -> np.ndarray:
        return np.r_[1.0, self.coeffs]

    def autocovariance(self, max_lag: int) -> np.ndarray:
        """Theoretical autocovariance at lags 0..max_lag via the Yule-Walker system."""
        p = self.order
        if p == 0:
            g = np.zeros(max_lag + 1)
            g[0] = self.innovation_variance
            return g
        # unknowns gamma(0..p); equation h: sum_{j=0..p} a_j gamma(|h-j|) = s2 * [h == 0]
        a = self.filter_denominator
        A = np.zeros((p + 1, p + 1))
        for h in range(p + 1):
            for j in range(p + 1):
                A[h, abs(h - j)] += a[j]
        rhs = np.zeros(p + 1)
        rhs[0] = self.innovation_variance
        g = list(np.linalg.solve(A, rhs))
        for h in range(p + 1, max_lag + 1):
            g.append(-np.dot(self.coeffs, [g[h - j] for j in range(1, p + 1)]))
        return np.array(g[: max_lag + 1])

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "coeffs": [float(c) for c in self.coeffs],
            "innovation_variance": self.innovation_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ARModel":
        return cls(int(d["order"]), d["coeffs"], float(d["innovation_variance"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ARModel":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, ARModel):
            return NotImplemented
        return (
            self.order == other.order
            and np.array_equal(self.coeffs, other.coeffs)
            and self.innovation_variance == other.innovation_variance
        )

    def __hash__(self):
        return hash((self.order, self.coeffs.tobytes(), self.innovation_variance))


@dataclass(frozen=True)
class OrderSelectionConfig:
    max_order: int = 20
    criterion: str = "bridge"

    def __post_init__(self):
        if self.max_order < 1:
            raise InvalidArgumentError("max_order must be a positive integer")
        if self.criterion != "bridge":
            raise InvalidArgumentError(f"unsupported order criterion {self.criterion!r}")


def ar_psd(model: ARModel, grid: FrequencyGrid, delta_t: float = 1.0) -> Periodogram:
    nu = grid.frequencies * delta_t
    j = np.arange(1, model.order + 1)
    denom = 1.0 + np.exp(-2j * np.pi * np.outer(nu, j)) @ model.coeffs
    return Periodogram(grid, model.innovation_variance / np.abs(denom) ** 2, PSD)


def burn_in(order: int) -> int:
    return max(1000, 20 * order)


def simulate_grid(model: ARModel, n_grid: int, gen: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Stationary-ish AR draws on the full regular grid, burn-in discarded."""
    shape = (n_grid,) if count is None else (count, n_grid)
    n_burn = burn_in(model.order)
    eps = gen.standard_normal(shape[:-1] + (n_burn + n_grid,))
    eps *= np.sqrt(model.innovation_variance)
    if model.order == 0:
        x = eps
    else:
        x = signal.lfilter([1.0], model.filter_denominator, eps, axis=-1)
    return x[..., n_burn:]


def simulate_batch(model: ARModel, scheme: SamplingScheme, gen: np.random.Generator, count: int) -> np.ndarray:
    """``count`` independent series at the scheme instants, shape (count, N)."""
    return simulate_grid(model, scheme.n_grid, gen, count)[:, scheme.indices]


def simulate(model: ARModel, scheme: SamplingScheme, rng=None) -> TimeSeries:
    x = simulate_grid(model, scheme.n_grid, as_generator(rng))
    return TimeSeries(scheme, x[scheme.indices])


def slotted_autocovariance(values: np.ndarray, scheme: SamplingScheme, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Pooled autocovariance over index pairs that differ by exactly ``h``.

    ``values`` has shape (L, N); each row is demeaned first. Returns the
    estimates for lags 0..max_lag and the pair count per lag.
    """
    x = np.atleast_2d(np.asarray(values, dtype=np.float64))
    x = x - x.mean(axis=1, keepdims=True)
    n_series = x.shape[0]
    z = np.zeros((n_series, scheme.n_grid))
    z[:, scheme.indices] = x
    mask = np.zeros(scheme.n_grid)
    mask[scheme.indices] = 1.0
    gamma = np.zeros(max_lag + 1)
    pairs = np.zeros(max_lag + 1, dtype=np.int64)
    for h in range(max_lag + 1):
        end = scheme.n_grid - h
        pairs[h] = n_series * int(round(np.dot(mask[:end], mask[h:])))
        if pairs[h]:
            gamma[h] = np.sum(z[:, :end] * z[:, h:]) / pairs[h]
    return gamma, pairs


def levinson_durbin(gamma: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Prediction coefficients (in the ``c_j`` convention) and variances per order.

    Returns ``(coeffs, sigma2)`` with ``coeffs[o]`` of length ``o`` and
    ``sigma2[o]`` the prediction error variance, for o = 0..len(gamma)-1.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    p_max = gamma.size - 1
    if not gamma[0] > 0:
        raise FitFailureError("autocovariance at lag 0 is not positive")
    phi = np.zeros(0)
    sigma2 = np.empty(p_max + 1)
    sigma2[0] = gamma[0]
    coeffs = [np.zeros(0)]
    for m in range(1, p_max + 1):
        k = (gamma[m] - np.dot(phi, gamma[m - 1 : 0 : -1])) / sigma2[m - 1]
        if not abs(k) < 1:
            raise FitFailureError(f"autocovariance sequence is not positive definite (order {m})")
        phi = np.r_[phi - k * phi[::-1], k]
        sigma2[m] = sigma2[m - 1] * (1.0 - k * k)
        coeffs.append(-phi)
    return coeffs, sigma2


def bridge_criterion(sigma2: np.ndarray, max_order: int, n_eff: int) -> np.ndarray:
    """``log sigma2_o + 2 (o_M / N) sum_{i<=o} 1/i`` for o = 0..len(sigma2)-1."""
    o = np.arange(sigma2.size)
    harmonic = np.r_[0.0, np.cumsum(1.0 / o[1:])]
    return np.log(sigma2) + 2.0 * max_order / n_eff * harmonic


def fit_values(values: np.ndarray, scheme: SamplingScheme, cfg: OrderSelectionConfig) -> ARModel:
    """:func:`fit` on an (L, N) array already known to share ``scheme``."""
    x = np.atleast_2d(values)
    o_max = cfg.max_order
    n_eff = x.shape[0] * scheme.n
    if 2 * o_max >= n_eff:
        raise InvalidArgumentError(
            f"max_order={o_max} must be below half the sample count ({n_eff})"
        )
    gamma, pairs = slotted_autocovariance(x, scheme, o_max)
    if np.any(pairs == 0):
        raise InsufficientLagCoverageError(int(np.argmax(pairs == 0)))
    coeffs, sigma2 = levinson_durbin(gamma)
    best = int(np.argmin(bridge_criterion(sigma2, o_max, n_eff)))
    try:
        return ARModel(best, coeffs[best], sigma2[best])
    except InvalidArgumentError as exc:
        raise FitFailureError(f"fitted order-{best} model rejected: {exc}") from exc


def fit(train: Sequence[TimeSeries], cfg: OrderSelectionConfig | None = None) -> ARModel:
    cfg = cfg or OrderSelectionConfig()
    scheme = _common_scheme(train)
    return fit_values(np.stack([s.values for s in train]), scheme, cfg)


def residual_whiteness(model: ARModel, values: np.ndarray, scheme: SamplingScheme, n_lags: int = 10) -> dict:
    """One-step prediction residuals where the whole AR history was observed.

    Reports residual autocorrelations (pooled, slotted) and a Box-Pierce
    statistic ``sum_h n_h r_h^2`` with ``n_h`` the residual pair count at lag
    h. Sparse uneven schemes may leave few or no usable residuals.
    """
    x = np.atleast_2d(np.asarray(values, dtype=np.float64))
    x = x - x.mean(axis=1, keepdims=True)
    p = model.order
    z = np.zeros((x.shape[0], scheme.n_grid))
    z[:, scheme.indices] = x
    seen = np.zeros(scheme.n_grid, dtype=bool)
    seen[scheme.indices] = True
    usable = seen.copy()
    usable[:p] = False
    for j in range(1, p + 1):
        usable[p:] &= seen[p - j : scheme.n_grid - j]
    resid_full = signal.lfilter(model.filter_denominator, [1.0], z, axis=-1)
    n_res = int(usable.sum()) * x.shape[0]
    out = {"n_residuals": n_res, "lags": list(range(1, n_lags + 1))}
    if n_res < n_lags + 2:
        out.update(autocorrelation=None, portmanteau_q=None, portmanteau_pvalue=None)
        return out
    r = np.where(usable, resid_full, 0.0)
    m = usable.astype(float)
    c0 = np.sum(r * r) / n_res
    acf, counts = [], []
    for h in range(1, n_lags + 1):
        npair = x.shape[0] * int(np.dot(m[:-h], m[h:]))
        counts.append(npair)
        acf.append(float(np.sum(r[:, :-h] * r[:, h:]) / npair / c0) if npair else 0.0)
    q = sum(c * a * a for a, c in zip(acf, counts))
    dof = max(n_lags - p, 1)
    out.update(
        autocorrelation=acf,
        portmanteau_q=float(q),
        portmanteau_pvalue=float(stats.chi2.sf(q, dof)),
    )
    return out
