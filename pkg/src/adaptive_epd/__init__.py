"""Static and adaptive exponential power distribution (EPD) estimation for return series."""

from .adaptive import AdaptiveState, RateConfig, adaptive_logpdf_terms, adaptive_step, init_state, run_stepwise
from .aepd import AepdParams, aepd_cdf, aepd_log_pdf, aepd_pdf
from .data import PriceSeries, ReturnSeries, load_price_csv, log_returns
from .epd import EpdParams, cdf, log_pdf, log_pdf_grad, pdf, quantile, sample, variance_of
from .evaluation import (
    cdf_normalize,
    compare_models,
    eval_adaptive,
    eval_garch,
    eval_static,
    ks_statistic,
    sweep_kappa,
)
from .exceptions import (
    DataError,
    DegenerateSampleError,
    DivergenceError,
    DomainError,
    EpdError,
    InsufficientDataError,
    NoSolutionError,
    UndefinedRateError,
)
from .garch import GarchParams, garch_filter, garch_fit
from .static import WeightedSample, fit_fixed_kappa, fit_full

__version__ = "0.1.0"

__all__ = [
    "AdaptiveState",
    "RateConfig",
    "adaptive_logpdf_terms",
    "adaptive_step",
    "init_state",
    "run_stepwise",
    "AepdParams",
    "aepd_cdf",
    "aepd_log_pdf",
    "aepd_pdf",
    "PriceSeries",
    "ReturnSeries",
    "load_price_csv",
    "log_returns",
    "EpdParams",
    "cdf",
    "log_pdf",
    "log_pdf_grad",
    "pdf",
    "quantile",
    "sample",
    "variance_of",
    "cdf_normalize",
    "compare_models",
    "eval_adaptive",
    "eval_garch",
    "eval_static",
    "ks_statistic",
    "sweep_kappa",
    "DataError",
    "DegenerateSampleError",
    "DivergenceError",
    "DomainError",
    "EpdError",
    "InsufficientDataError",
    "NoSolutionError",
    "UndefinedRateError",
    "GarchParams",
    "garch_filter",
    "garch_fit",
    "WeightedSample",
    "fit_fixed_kappa",
    "fit_full",
]
