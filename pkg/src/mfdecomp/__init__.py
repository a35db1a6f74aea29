"""Multifractality measurement and decomposition toolkit.

Measures the generalized Hurst profile h(q) of a time series with MFDFA and
splits the observed multifractal spread into finite-size / linear,
fat-tail, and nonlinear-correlation components, calibrated against
q-Gaussian synthetic ensembles.
"""

__version__ = "0.1.0"

from .errors import DataError, ValidationError
from .series import (
    ReturnSeries,
    SessionCalendar,
    TimeSeries,
    log_returns,
    normalize,
    remove_overnight,
    resample,
)
from .qgen import (
    QGaussianParams,
    beta_from_qtilde,
    cdf,
    cdf_closed_form,
    pdf,
    qtilde_from_beta,
    regime,
    sample_asymmetric,
    sample_symmetric,
)
from .mfdfa import (
    FluctuationSurface,
    HurstProfile,
    MfdfaConfig,
    detect_crossover,
    fit_hq,
    fluctuation_function,
    fluctuation_surface,
    profile,
    segment_variances,
)
from .spectrum import SingularitySpectrum, delta_h, delta_h_curve, legendre
from .surrogate import SurrogateSpec, fourier_filtered, shuffle
from .decompose import (
    DEFAULT_CALIBRATION,
    DecomposeConfig,
    DecompositionReport,
    FseParams,
    FtCalibration,
    calibrate,
    decompose,
    delta_h_fse,
    delta_h_fse_montecarlo,
    delta_h_ft_montecarlo,
    delta_h_ft_powerlaw,
    fit_tail_beta,
)

__all__ = [
    "__version__",
    "DataError",
    "ValidationError",
    "TimeSeries",
    "ReturnSeries",
    "SessionCalendar",
    "resample",
    "log_returns",
    "normalize",
    "remove_overnight",
    "QGaussianParams",
    "regime",
    "beta_from_qtilde",
    "qtilde_from_beta",
    "sample_symmetric",
    "sample_asymmetric",
    "pdf",
    "cdf",
    "cdf_closed_form",
    "MfdfaConfig",
    "FluctuationSurface",
    "HurstProfile",
    "profile",
    "segment_variances",
    "fluctuation_function",
    "fluctuation_surface",
    "fit_hq",
    "detect_crossover",
    "SingularitySpectrum",
    "legendre",
    "delta_h",
    "delta_h_curve",
    "SurrogateSpec",
    "fourier_filtered",
    "shuffle",
    "DEFAULT_CALIBRATION",
    "FtCalibration",
    "FseParams",
    "fit_tail_beta",
    "delta_h_ft_powerlaw",
    "delta_h_ft_montecarlo",
    "delta_h_fse",
    "delta_h_fse_montecarlo",
    "DecomposeConfig",
    "DecompositionReport",
    "decompose",
    "calibrate",
]
