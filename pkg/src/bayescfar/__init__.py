"""Bayesian interference-compensating CFAR detectors for exponential clutter."""
from .detectors import (
    ClutterRangeProfile,
    Decision,
    DetectorSpec,
    InterferencePrior,
    Variant,
    bayes_threshold,
    ca_cfar_pfa,
    ca_cfar_threshold,
    case1_pfa,
    case1_threshold,
    case2_pfa,
    case3_pfa,
    decide,
    threshold,
    variant_pfa,
)
from .errors import BayesCfarError, ConvergenceError, DomainError, NumericalError, ParameterError
from .kernels import BACKEND
from .simulate import Interferer, MonteCarloReport, Scenario, mc_pfa, run_pd_curve, run_pfa_sweep
from .stats import RngStream, derive_stream, log_sum_exp, sample_exponential

__version__ = "0.1.0"
