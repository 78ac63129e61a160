"""False-alarm calibration for periodogram max tests on uneven sampling."""

__version__ = "0.1.0"

from .errors import (
    DegenerateDenominatorError,
    DegenerateVarianceError,
    FitFailureError,
    GEVFitError,
    InsufficientLagCoverageError,
    InvalidArgumentError,
    NotOnGridError,
    PfaBootError,
)
from .sampling import SamplingScheme, TimeSeries, make_uneven, validate_on_grid
from .spectral import (
    FrequencyGrid,
    Periodogram,
    averaged_periodogram,
    max_stat,
    periodogram,
    standardize,
)
from .armodel import ARModel, OrderSelectionConfig, ar_psd, fit, simulate
from .gev import GEVParams, FitReport, gev_cdf, gev_fit, gev_quantile
from .bootstrap import (  # noqa: E402
    BootstrapConfig,
    FaRun,
    empirical_pfa,
    fa_distribution,
    mc_oracle,
    permutation_baseline,
    run_b0,
    run_bstar,
    threshold_for,
)
