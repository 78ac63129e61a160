"""AR-aided bootstrap of false-alarm rates for the standardized-periodogram max test.

``run_b0`` implements the nested procedure: fit an AR model to the genuine
training set, then for each outer replicate simulate a fake training set,
refit it, and draw ``b`` maxima of standardized periodograms from the refit
model. ``run_bstar`` is the same loop with each replicate's maxima summarized
by a fitted GEV law.

Training series may live on the full regular grid or on the analysis
instants; periodograms are always evaluated on ``cfg.scheme`` (the analysis
instants), which must be a subset of the training instants.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as rngmod
from .armodel import ARModel, OrderSelectionConfig, fit_values, simulate_batch
from .errors import (
    DegenerateDenominatorError,
    DegenerateVarianceError,
    GEVFitError,
    InvalidArgumentError,
    PfaBootError,
)
from .gev import MIN_MAXIMA, FitReport, GEVParams, gev_fit, gev_quantile, gev_sf
from .sampling import SamplingScheme, TimeSeries
from .spectral import FrequencyGrid, Kernel, _common_scheme, kernel_for

B0 = "b0"
BSTAR = "bstar"
VARIANTS = (B0, BSTAR)
MAX_INVALID_FRACTION = 0.05
# draws per matrix product; fixed so results never depend on scheduling
CHUNK = 64


@dataclass(frozen=True)
class BootstrapConfig:
    L: int
    B: int
    b: int
    grid: FrequencyGrid
    order_cfg: OrderSelectionConfig = field(default_factory=OrderSelectionConfig)
    variant: str = B0
    master_seed: int = 0
    scheme: SamplingScheme | None = None

    def __post_init__(self):
        if self.L < 1 or self.B < 1 or self.b < 1:
            raise InvalidArgumentError(f"need L, B, b >= 1 (got L={self.L}, B={self.B}, b={self.b})")
        if self.variant not in VARIANTS:
            raise InvalidArgumentError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == BSTAR and self.b < MIN_MAXIMA:
            raise InvalidArgumentError(f"variant bstar needs b >= {MIN_MAXIMA} maxima per replicate, got b={self.b}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise InvalidArgumentError("master_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        d = {
            "L": self.L,
            "B": self.B,
            "b": self.b,
            "variant": self.variant,
            "master_seed": int(self.master_seed),
            "max_order": self.order_cfg.max_order,
            "criterion": self.order_cfg.criterion,
            "n_frequencies": self.grid.k,
            "frequency_min": float(self.grid.frequencies[0]),
            "frequency_max": float(self.grid.frequencies[-1]),
        }
        if self.scheme is not None:
            d["analysis_indices"] = [int(i) for i in self.scheme.indices]
        return d


@dataclass(frozen=True, eq=False)
class FaRun:
    """Outputs of one bootstrap run.

    ``maxima`` is (B, b) with each row sorted ascending, which is the exact
    empirical cdf of that replicate. ``gev`` holds the per-replicate fits
    (``None`` for a failed fit) and is only filled for the bstar variant.
    """

    config: BootstrapConfig
    scheme: SamplingScheme
    training_scheme: SamplingScheme
    first_stage: ARModel
    models: tuple[ARModel, ...]
    maxima: np.ndarray = field(repr=False)
    gev: tuple[GEVParams | None, ...] | None = None
    gev_reports: tuple[FitReport | None, ...] | None = None

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def n_replicates(self) -> int:
        return self.maxima.shape[0]

    def valid(self, variant: str | None = None) -> np.ndarray:
        variant = variant or self.variant
        if variant == B0:
            return np.ones(self.n_replicates, dtype=bool)
        if self.gev is None:
            raise InvalidArgumentError("this run carries no GEV fits; use variant b0 or with_gev()")
        return np.array([g is not None for g in self.gev])

    def curves(self, gamma, variant: str | None = None) -> np.ndarray:
        """FA estimates of every valid replicate at ``gamma``; shape (B_valid, *gamma.shape)."""
        variant = variant or self.variant
        gamma = np.asarray(gamma, dtype=np.float64)
        if variant == B0:
            return np.stack([empirical_pfa(row, gamma, presorted=True) for row in self.maxima])
        mask = self.valid(BSTAR)
        return np.stack([np.asarray(gev_sf(g, gamma), dtype=np.float64) for g, ok in zip(self.gev, mask) if ok])

    def with_gev(self) -> "FaRun":
        """Same run with per-replicate GEV fits added (the bstar view of b0 maxima)."""
        if self.config.b < MIN_MAXIMA:
            raise InvalidArgumentError(f"GEV fits need b >= {MIN_MAXIMA}")
        fits, reports = _fit_gev_rows(self.maxima)
        cfg = _replace_variant(self.config, BSTAR)
        return FaRun(cfg, self.scheme, self.training_scheme, self.first_stage, self.models, self.maxima, fits, reports)


def _replace_variant(cfg: BootstrapConfig, variant: str) -> BootstrapConfig:
    return BootstrapConfig(cfg.L, cfg.B, cfg.b, cfg.grid, cfg.order_cfg, variant, cfg.master_seed, cfg.scheme)


@dataclass(frozen=True)
class Summary:
    values: np.ndarray
    mean: float
    std: float
    ci95: tuple[float, float]

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "ci95": list(self.ci95)}


def _summarize(values, clip: tuple[float, float] | None = None) -> Summary:
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    lo, hi = mean - 1.96 * std, mean + 1.96 * std
    if clip is not None:
        lo, hi = max(lo, clip[0]), min(hi, clip[1])
    return Summary(v, mean, std, (lo, hi))


def empirical_pfa(maxima, gamma, presorted: bool = False):
    """Fraction of maxima strictly above ``gamma``: ``1 - #{m_i <= gamma} / b``."""
    m = np.asarray(maxima, dtype=np.float64)
    if m.size == 0:
        raise InvalidArgumentError("need at least one maximum")
    if not presorted:
        m = np.sort(m)
    below = np.searchsorted(m, gamma, side="right")
    out = 1.0 - below / m.size
    return out[()] if np.ndim(out) == 0 else out


def fa_distribution(run: FaRun, gamma: float, variant: str | None = None) -> Summary:
    """Distribution of the replicate FA estimates at one threshold, with a Gaussian 95% CI."""
    return _summarize(run.curves(float(gamma), variant), clip=(0.0, 1.0))


def threshold_for(run: FaRun, target_pfa: float, variant: str | None = None) -> Summary:
    """Per-replicate threshold for a target FA rate.

    bstar inverts each fitted GEV. b0 takes the order statistic
    ``m_(ceil(b (1 - target)))`` (1-based) of each replicate's maxima, so at
    most ``b * target`` maxima lie strictly above it.
    """
    if not 0 < target_pfa < 1:
        raise InvalidArgumentError(f"target_pfa must lie in (0, 1), got {target_pfa}")
    variant = variant or run.variant
    if variant == BSTAR:
        mask = run.valid(BSTAR)
        values = [gev_quantile(g, target_pfa) for g, ok in zip(run.gev, mask) if ok]
        return _summarize(values)
    b = run.maxima.shape[1]
    if b * target_pfa < 1:
        raise InvalidArgumentError(
            f"target_pfa={target_pfa} needs b >= {math.ceil(1 / target_pfa)} maxima per replicate (have {b})"
        )
    rank = math.ceil(b * (1.0 - target_pfa) - 1e-9)
    return _summarize(run.maxima[:, rank - 1])


def _annotate(exc: PfaBootError, **where) -> PfaBootError:
    tag = ", ".join(f"{k}={v}" for k, v in where.items())
    exc.provenance = where
    exc.args = (f"[{tag}] {exc}",)
    return exc


def draw_maxima(
    model: ARModel,
    scheme: SamplingScheme,
    kernel: Kernel,
    L: int,
    n: int,
    gen_for: Callable[[int], np.random.Generator],
    provenance: dict | None = None,
) -> np.ndarray:
    """``n`` draws of ``max_k P(nu_k; X) / mean_l P(nu_k; X_l)``, all series from ``model``.

    Draw ``j`` uses only ``gen_for(j)``: row 0 is the numerator series and
    rows 1..L the denominator training series.
    """
    out = np.empty(n)
    for start in range(0, n, CHUNK):
        stop = min(start + CHUNK, n)
        X = np.concatenate([simulate_batch(model, scheme, gen_for(j), L + 1) for j in range(start, stop)])
        P = kernel(X).reshape(stop - start, L + 1, -1)
        den = P[:, 1:, :].mean(axis=1)
        bad = np.any(den <= 0, axis=1)
        if np.any(bad):
            j = start + int(np.argmax(bad))
            raise _annotate(
                DegenerateDenominatorError("averaged periodogram has a zero ordinate"),
                **(provenance or {}),
                draw=j,
            )
        out[start:stop] = np.max(P[:, 0, :] / den, axis=1)
    return out


def _fit_gev_rows(maxima: np.ndarray):
    fits, reports = [], []
    for row in maxima:
        try:
            g, rep = gev_fit(row)
        except GEVFitError as exc:
            g, rep = None, exc.report
        fits.append(g)
        reports.append(rep)
    n_bad = sum(g is None for g in fits)
    if n_bad > MAX_INVALID_FRACTION * len(fits):
        raise GEVFitError(f"{n_bad} of {len(fits)} replicate GEV fits failed (budget {MAX_INVALID_FRACTION:.0%})")
    return tuple(fits), tuple(reports)


def _check_schemes(train_scheme: SamplingScheme, scheme: SamplingScheme) -> None:
    if scheme.n_grid != train_scheme.n_grid or scheme.delta_t != train_scheme.delta_t:
        raise InvalidArgumentError("analysis scheme and training series live on different grids")
    if not np.all(np.isin(scheme.indices, train_scheme.indices)):
        raise InvalidArgumentError("analysis instants must be a subset of the training instants")


def run_b0(train: Sequence[TimeSeries], cfg: BootstrapConfig, threads: int = 1) -> FaRun:
    """Nested AR-aided bootstrap; bit-identical for a given ``cfg.master_seed``.

    Replicate ``i`` draws its fake training set from stream ``(FAKE_TRAIN, i)``
    and inner draw ``j`` from ``(INNER, i, j)``, so ``threads`` only changes
    scheduling, never results.
    """
    train_scheme = _common_scheme(train)
    if len(train) != cfg.L:
        raise InvalidArgumentError(f"config L={cfg.L} but {len(train)} training series were given")
    scheme = cfg.scheme or train_scheme
    _check_schemes(train_scheme, scheme)
    values = np.stack([s.values for s in train])
    try:
        first = fit_values(values, train_scheme, cfg.order_cfg)
    except PfaBootError as exc:
        raise _annotate(exc, stage="first-stage fit")
    kernel = kernel_for(scheme, cfg.grid)
    seed = cfg.master_seed

    def replicate(i: int):
        fake = simulate_batch(first, train_scheme, rngmod.stream(seed, rngmod.FAKE_TRAIN, i), cfg.L)
        try:
            model = fit_values(fake, train_scheme, cfg.order_cfg)
        except PfaBootError as exc:
            raise _annotate(exc, replicate=i)
        m = draw_maxima(
            model,
            scheme,
            kernel,
            cfg.L,
            cfg.b,
            lambda j: rngmod.stream(seed, rngmod.INNER, i, j),
            provenance={"replicate": i},
        )
        return model, np.sort(m)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(replicate, range(cfg.B)))
    else:
        results = [replicate(i) for i in range(cfg.B)]
    models = tuple(r[0] for r in results)
    maxima = np.stack([r[1] for r in results])
    maxima.setflags(write=False)
    run = FaRun(cfg, scheme, train_scheme, first, models, maxima)
    if cfg.variant == BSTAR:
        run = run.with_gev()
    return run


def run_bstar(train: Sequence[TimeSeries], cfg: BootstrapConfig, threads: int = 1) -> FaRun:
    return run_b0(train, _replace_variant(cfg, BSTAR), threads)


def mc_oracle(
    model: ARModel,
    scheme: SamplingScheme,
    grid: FrequencyGrid,
    L: int,
    n_mc: int,
    seed: int = 0,
) -> np.ndarray:
    """Sorted maxima of the standardized periodogram under the true model.

    Each draw simulates a fresh numerator and a fresh L-series denominator.
    """
    if n_mc < 1:
        raise InvalidArgumentError("n_mc must be >= 1")
    m = draw_maxima(model, scheme, kernel_for(scheme, grid), L, n_mc, lambda j: rngmod.stream(seed, rngmod.ORACLE, j))
    return np.sort(m)


def _variance_normalized_max(X: np.ndarray, kernel: Kernel) -> np.ndarray:
    Xc = X - X.mean(axis=1, keepdims=True)
    var = Xc.var(axis=1, ddof=1)
    return np.max(kernel(Xc), axis=1) / var


def permutation_baseline(x_obs: TimeSeries, grid: FrequencyGrid, n_perm: int, rng=None) -> np.ndarray:
    """Sorted maxima of ``P / var`` over random permutations of the observed values.

    This is the correlation-blind comparator: values are shuffled across the
    fixed instants, the series is demeaned (the constant offset a floating-mean
    periodogram would absorb), and the Schuster periodogram is divided by the
    sample variance of ``x_obs``.
    """
    if n_perm < 1:
        raise InvalidArgumentError("n_perm must be >= 1")
    x = x_obs.values
    if not np.var(x) > 0:
        raise DegenerateVarianceError("observation has zero sample variance")
    gen = rngmod.as_generator(rng)
    kernel = kernel_for(x_obs.scheme, grid)
    out = np.empty(n_perm)
    for start in range(0, n_perm, CHUNK):
        stop = min(start + CHUNK, n_perm)
        X = np.stack([gen.permutation(x) for _ in range(start, stop)])
        out[start:stop] = _variance_normalized_max(X, kernel)
    return np.sort(out)


def baseline_oracle(model: ARModel, scheme: SamplingScheme, grid: FrequencyGrid, n_mc: int, seed: int = 0) -> np.ndarray:
    """True null distribution of the baseline statistic ``max P / var`` under ``model``."""
    kernel = kernel_for(scheme, grid)
    out = np.empty(n_mc)
    for start in range(0, n_mc, CHUNK):
        stop = min(start + CHUNK, n_mc)
        X = np.concatenate([simulate_batch(model, scheme, rngmod.stream(seed, rngmod.ORACLE, j), 1) for j in range(start, stop)])
        out[start:stop] = _variance_normalized_max(X, kernel)
    return np.sort(out)


def dkw_epsilon(n: int, alpha: float = 0.05) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band for an n-sample empirical cdf."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
