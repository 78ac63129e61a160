import time

import numpy as np
import pytest
from hypothesis import settings

from pfaboot import ARModel, FrequencyGrid, SamplingScheme, make_uneven, mc_oracle, simulate
from pfaboot import rng as R
from pfaboot.armodel import simulate_batch

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FIG1_COEFFS = [0.7, 0.05, 0.0, 0.3, 0.0, -0.3]
N_GRID = 1024
N_KEEP = 103
L = 20

# wall-clock seconds of expensive session fixtures, read by the acceptance report
TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def ar6():
    return ARModel.from_coeffs(FIG1_COEFFS)


@pytest.fixture(scope="session")
def white():
    return ARModel(0, [], 1.0)


@pytest.fixture(scope="session")
def fig1_scheme():
    return make_uneven(N_GRID, N_KEEP, R.stream(0, R.SAMPLING))


@pytest.fixture(scope="session")
def regular_grid():
    return SamplingScheme.regular(N_GRID)


@pytest.fixture(scope="session")
def fig1_grid(fig1_scheme):
    return FrequencyGrid.for_scheme(fig1_scheme)


def training_set(model, scheme, seed, n=L):
    gen = R.stream(seed, R.SIMULATE, 0)
    return [simulate(model, scheme, gen) for _ in range(n)]


@pytest.fixture(scope="session")
def fig1_train(ar6, regular_grid):
    return training_set(ar6, regular_grid, seed=2017)


@pytest.fixture(scope="session")
def fig1_oracle(ar6, fig1_scheme, fig1_grid):
    """10^5 sorted maxima under the true AR(6); shared by tests and acceptance."""
    t0 = time.perf_counter()
    out = mc_oracle(ar6, fig1_scheme, fig1_grid, L, 100_000, seed=99)
    TIMINGS["fig1_oracle"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def fig1_gamma10(fig1_oracle):
    """Threshold at which the oracle FA rate is 0.1."""
    return float(np.quantile(fig1_oracle, 0.9))


def draws(model, scheme, seed, count):
    return simulate_batch(model, scheme, R.stream(seed, R.SIMULATE, 9), count)
