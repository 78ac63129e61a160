"""Generalized extreme-value law: cdf, upper-tail quantile, ML fit.

``xi > 0`` is the heavy (Frechet-type) tail. scipy's ``genextreme`` uses the
opposite sign for its shape ``c``; nothing here depends on it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize
from scipy.special import gamma as gamma_fn

from .errors import GEVFitError, InvalidArgumentError

GUMBEL_EPS = 1e-6
MIN_MAXIMA = 20
XATOL = 1e-8
MAX_EVALUATIONS = 10_000
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class GEVParams:
    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgumentError(f"GEV scale must be > 0, got {self.sigma}")
        if not (np.isfinite(self.mu) and np.isfinite(self.xi)):
            raise InvalidArgumentError("GEV location and shape must be finite")

    def in_support(self, m):
        m = np.asarray(m, dtype=np.float64)
        if abs(self.xi) < GUMBEL_EPS:
            return np.ones(m.shape, dtype=bool)
        return 1.0 + self.xi * (m - self.mu) / self.sigma > 0

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "xi": self.xi}


@dataclass(frozen=True)
class FitReport:
    log_likelihood: float
    iterations: int
    evaluations: int
    converged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def gev_cdf(p: GEVParams, m):
    """G(m); below-support points give 0 (xi > 0), above-support give 1 (xi < 0)."""
    m = np.asarray(m, dtype=np.float64)
    y = (m - p.mu) / p.sigma
    if abs(p.xi) < GUMBEL_EPS:
        with np.errstate(over="ignore"):
            out = np.exp(-np.exp(-y))
    else:
        z = 1.0 + p.xi * y
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            t = np.where(z > 0, np.power(np.where(z > 0, z, 1.0), -1.0 / p.xi), 0.0)
            out = np.exp(-t)
        outside = z <= 0
        out = np.where(outside, 0.0 if p.xi > 0 else 1.0, out)
    return out[()] if out.ndim == 0 else out


def gev_sf(p: GEVParams, m):
    """1 - G(m), computed without cancellation in the far upper tail."""
    m = np.asarray(m, dtype=np.float64)
    y = (m - p.mu) / p.sigma
    if abs(p.xi) < GUMBEL_EPS:
        out = -np.expm1(-np.exp(-y))
    else:
        z = 1.0 + p.xi * y
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            t = np.power(np.where(z > 0, z, 1.0), -1.0 / p.xi)
            out = -np.expm1(-t)
        out = np.where(z <= 0, 1.0 if p.xi > 0 else 0.0, out)
    return out[()] if out.ndim == 0 else out


def gev_quantile(p: GEVParams, pfa):
    """Threshold gamma with ``1 - G(gamma) = pfa``."""
    q = np.asarray(pfa, dtype=np.float64)
    if np.any(~((q > 0) & (q < 1))):
        raise InvalidArgumentError(f"pfa must lie in (0, 1), got {pfa}")
    w = -np.log1p(-q)  # -log(1 - pfa)
    if abs(p.xi) < GUMBEL_EPS:
        out = p.mu - p.sigma * np.log(w)
    else:
        out = p.mu - p.sigma / p.xi * (1.0 - np.power(w, -p.xi))
    return out[()] if out.ndim == 0 else out


def pwm_estimate(maxima) -> GEVParams:
    """Probability-weighted-moment (L-moment) GEV estimate, Hosking's approximation."""
    x = np.sort(np.asarray(maxima, dtype=np.float64))
    n = x.size
    j = np.arange(n)
    b0 = x.mean()
    b1 = np.sum(j / (n - 1) * x) / n
    b2 = np.sum(j * (j - 1) / ((n - 1) * (n - 2)) * x) / n
    l1, l2, l3 = b0, 2 * b1 - b0, 6 * b2 - 6 * b1 + b0
    if not (x[-1] > x[0] and l2 > 0):
        raise GEVFitError("degenerate maxima: zero L-scale (constant sample)")
    t3 = l3 / l2
    c = 2.0 / (3.0 + t3) - np.log(2) / np.log(3)
    k = 7.8590 * c + 2.9554 * c * c  # Hosking's k = -xi
    if abs(k) < GUMBEL_EPS:
        sigma = l2 / np.log(2)
        return GEVParams(l1 - EULER_GAMMA * sigma, sigma, 0.0)
    sigma = l2 * k / ((1 - 2.0 ** (-k)) * gamma_fn(1 + k))
    mu = l1 - sigma * (1 - gamma_fn(1 + k)) / k
    if not (np.isfinite(sigma) and sigma > 0):
        raise GEVFitError(f"PWM initialization gave scale {sigma}")
    return GEVParams(float(mu), float(sigma), float(-k))


def negative_log_likelihood(theta, m) -> float:
    """GEV NLL at ``theta = (mu, log sigma, xi)``; +inf if any sample is off-support."""
    mu, log_sigma, xi = theta
    sigma = np.exp(log_sigma)
    y = (m - mu) / sigma
    n = m.size
    if abs(xi) < GUMBEL_EPS:
        return float(n * log_sigma + np.sum(y) + np.sum(np.exp(-y)))
    z = 1.0 + xi * y
    if np.any(z <= 0):
        return np.inf
    lz = np.log(z)
    return float(n * log_sigma + (1.0 + 1.0 / xi) * np.sum(lz) + np.sum(np.exp(-lz / xi)))


def gev_fit(maxima) -> tuple[GEVParams, FitReport]:
    """Maximum-likelihood GEV fit by Nelder-Mead over (mu, log sigma, xi).

    The data are first standardized by the PWM location and scale, so the
    simplex tolerance is relative to the spread of the maxima; the result is
    mapped back afterwards.
    """
    m = np.asarray(maxima, dtype=np.float64).reshape(-1)
    if m.size < MIN_MAXIMA:
        raise InvalidArgumentError(f"need at least {MIN_MAXIMA} maxima for a GEV fit, got {m.size}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("maxima must be finite")
    init = pwm_estimate(m)
    loc, scale = init.mu, init.sigma
    u = (m - loc) / scale
    x0 = np.array([0.0, 0.0, init.xi])
    if not np.isfinite(negative_log_likelihood(x0, u)):
        # PWM shape can put extreme samples off-support; start from Gumbel
        x0 = np.array([0.0, 0.0, 0.0])
    res = optimize.minimize(
        negative_log_likelihood,
        x0,
        args=(u,),
        method="Nelder-Mead",
        options={"xatol": XATOL, "fatol": np.inf, "maxfev": MAX_EVALUATIONS, "maxiter": MAX_EVALUATIONS},
    )
    mu_u, log_sigma_u, xi = res.x
    loglik = -float(res.fun) - m.size * np.log(scale)
    converged = bool(res.nfev < MAX_EVALUATIONS and np.isfinite(res.fun))
    report = FitReport(loglik, int(res.nit), int(res.nfev), converged)
    if not converged:
        raise GEVFitError("GEV likelihood maximization did not converge", report)
    try:
        params = GEVParams(float(loc + scale * mu_u), float(scale * np.exp(log_sigma_u)), float(xi))
    except InvalidArgumentError as exc:
        raise GEVFitError(f"GEV fit produced invalid parameters: {exc}", report) from exc
    return params, report
