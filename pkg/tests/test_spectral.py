import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from pfaboot import (
    DegenerateDenominatorError,
    FrequencyGrid,
    InvalidArgumentError,
    Periodogram,
    SamplingScheme,
    TimeSeries,
    averaged_periodogram,
    gev_fit,
    make_uneven,
    max_stat,
    periodogram,
    standardize,
)
from pfaboot import rng as R
from pfaboot.armodel import simulate_batch
from pfaboot.bootstrap import dkw_epsilon, draw_maxima, empirical_pfa
from pfaboot.gev import gev_sf
from pfaboot.spectral import AVERAGED, kernel_for, schuster


def direct_periodogram(x, t, nu):
    """Textbook double loop, independent of the kernel matrix path."""
    out = []
    for f in nu:
        z = sum(xj * cmath.exp(-2j * math.pi * f * tj) for xj, tj in zip(x, t))
        out.append(abs(z) ** 2 / len(x))
    return np.array(out)


def test_default_grid():
    g = FrequencyGrid.default(1024)
    assert g.k == 512
    assert g.frequencies[0] == 1 / 1024
    assert g.frequencies[-1] == 0.5
    g2 = FrequencyGrid.default(100, delta_t=2.0, oversample=3)
    assert g2.k == 150
    assert np.isclose(g2.frequencies[-1], 0.25)


def test_grid_invariants():
    with pytest.raises(InvalidArgumentError):
        FrequencyGrid([0.0, 0.1])
    with pytest.raises(InvalidArgumentError):
        FrequencyGrid([0.2, 0.1])
    with pytest.raises(InvalidArgumentError):
        FrequencyGrid.default(64, oversample=0)


def test_constant_at_zero_frequency():
    t = np.array([0.0, 3.0, 4.0, 9.0, 13.0])
    out = schuster(np.full(5, 2.5), t, [0.0])
    assert out[0] == pytest.approx(5 * 2.5**2)


def test_single_sample():
    out = schuster([1.7], [4.0], [0.1, 0.37, 0.5])
    assert np.allclose(out, 1.7**2)


def test_fourier_bin_sinusoid():
    n, a = 64, 1.3
    s = SamplingScheme.regular(n)
    x = a * np.sin(2 * np.pi * 8 / 64 * s.times)
    grid = FrequencyGrid.for_scheme(s)
    p = periodogram(TimeSeries(s, x), grid)
    oracle = direct_periodogram(x, s.times, grid.frequencies)
    assert oracle[7] == pytest.approx(n * a**2 / 4, rel=1e-9)
    assert p.ordinates[7] == pytest.approx(n * a**2 / 4, rel=1e-9)


def test_matches_direct_summation_uneven():
    s = make_uneven(200, 37, 3, delta_t=0.25)
    x = np.random.default_rng(1).standard_normal(37)
    grid = FrequencyGrid.for_scheme(s, oversample=2)
    p = periodogram(TimeSeries(s, x), grid)
    assert np.allclose(p.ordinates, direct_periodogram(x, s.times, grid.frequencies), rtol=1e-10, atol=1e-12)


@given(st.floats(-1e3, 1e3, allow_nan=False), st.integers(0, 10_000))
def test_scale_law(a, seed):
    s = make_uneven(128, 20, seed)
    x = np.random.default_rng(seed).standard_normal(20)
    grid = FrequencyGrid.for_scheme(s)
    p1 = periodogram(TimeSeries(s, x), grid).ordinates
    p2 = periodogram(TimeSeries(s, a * x), grid).ordinates
    assert np.allclose(p2, a * a * p1, rtol=1e-9, atol=1e-300)


def test_deterministic():
    s = make_uneven(512, 50, 0)
    x = TimeSeries(s, np.random.default_rng(0).standard_normal(50))
    grid = FrequencyGrid.for_scheme(s)
    assert np.array_equal(periodogram(x, grid).ordinates, periodogram(x, grid).ordinates)


def test_averaged_single_is_plain():
    s = make_uneven(64, 12, 1)
    x = TimeSeries(s, np.arange(12.0))
    grid = FrequencyGrid.for_scheme(s)
    avg = averaged_periodogram([x], grid)
    assert avg.flavor == AVERAGED and avg.L == 1
    assert np.array_equal(avg.ordinates, periodogram(x, grid).ordinates)


def test_averaged_sign_flip():
    s = make_uneven(64, 12, 1)
    v = np.random.default_rng(2).standard_normal(12)
    grid = FrequencyGrid.for_scheme(s)
    avg = averaged_periodogram([TimeSeries(s, v), TimeSeries(s, -v)], grid)
    assert np.allclose(avg.ordinates, periodogram(TimeSeries(s, v), grid).ordinates)


def test_averaged_rejects_mixed_schemes():
    a, b = make_uneven(64, 12, 1), make_uneven(64, 12, 2)
    grid = FrequencyGrid.for_scheme(a)
    with pytest.raises(InvalidArgumentError):
        averaged_periodogram([TimeSeries(a, np.ones(12)), TimeSeries(b, np.ones(12))], grid)


def test_averaged_white_mean(white):
    s = SamplingScheme.regular(256)
    X = simulate_batch(white, s, R.stream(5, R.SIMULATE), 20)
    grid = FrequencyGrid.for_scheme(s)
    avg = averaged_periodogram([TimeSeries(s, r) for r in X], grid)
    k_eff = grid.k
    assert abs(avg.ordinates.mean() - 1.0) < 3 * (20 * k_eff) ** -0.5


def test_standardize_self_ratio():
    g = FrequencyGrid([0.1, 0.2, 0.3])
    den = Periodogram(g, [1.0, 2.0, 3.0], AVERAGED, 4)
    num = Periodogram(g, [1.0, 2.0, 3.0])
    out = standardize(num, den)
    assert np.array_equal(out.ordinates, np.ones(3))
    assert out.L == 4


def test_standardize_zero_denominator():
    g = FrequencyGrid([0.1, 0.2, 0.3])
    with pytest.raises(DegenerateDenominatorError):
        standardize(Periodogram(g, [1.0, 1.0, 1.0]), Periodogram(g, [1.0, 0.0, 3.0], AVERAGED, 2))


def test_standardize_needs_same_grid():
    with pytest.raises(InvalidArgumentError):
        standardize(
            Periodogram(FrequencyGrid([0.1]), [1.0]),
            Periodogram(FrequencyGrid([0.2]), [1.0], AVERAGED, 1),
        )


@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_standardize_scale_invariant(a, seed):
    s = make_uneven(128, 30, seed)
    grid = FrequencyGrid.for_scheme(s)
    X = np.random.default_rng(seed).standard_normal((4, 30))

    def build(scale):
        num = periodogram(TimeSeries(s, scale * X[0]), grid)
        den = averaged_periodogram([TimeSeries(s, scale * r) for r in X[1:]], grid)
        return standardize(num, den).ordinates

    assert np.allclose(build(1.0), build(a), rtol=1e-9)


def test_max_stat():
    g = FrequencyGrid([0.1, 0.2, 0.3])
    assert max_stat(Periodogram(g, [1.0, 7.0, 3.0])) == (7.0, 1)
    assert max_stat(Periodogram(g, [2.0, 2.0, 2.0])) == (2.0, 0)


def test_standardized_ordinates_f_distributed(ar6):
    # light version of the acceptance check: fewer draws, looser bound
    s = SamplingScheme.regular(128)
    grid = FrequencyGrid.for_scheme(s)
    kernel = kernel_for(s, grid)
    ratios = []
    for j in range(2000):
        P = kernel(simulate_batch(ar6, s, R.stream(11, R.MARGINAL, j), 21))
        ratios.append(P[0, [10, 30]] / P[1:, [10, 30]].mean(axis=0))
    ratios = np.array(ratios)
    for col in range(2):
        assert stats.kstest(ratios[:, col], stats.f(2, 40).cdf).statistic < 0.04


def test_max_follows_gev_even_sampling(ar6):
    s = SamplingScheme.regular(1024)
    grid = FrequencyGrid.for_scheme(s)
    m = draw_maxima(ar6, s, kernel_for(s, grid), 20, 5000, lambda j: R.stream(3, R.ORACLE, j))
    g, _ = gev_fit(m)
    gammas = np.quantile(m, np.linspace(0.01, 0.99, 99))
    gap = np.max(np.abs(gev_sf(g, gammas) - empirical_pfa(m, gammas)))
    assert gap < dkw_epsilon(m.size)
