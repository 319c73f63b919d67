"""Wavelet deconvolution of a function and its derivatives from multichannel data."""

from .bench import (
    ExperimentSpec,
    RateQuery,
    lower_bound_exponent,
    rate_sweep,
    rho_star,
    run_experiment,
    theoretical_exponent,
)
from .deconvolver import WaveletDeconvolver
from .estimators import LAMBDA_STAR, METHODS, EstimatorConfig, estimate, level_plan
from .fourier import CoverageError, FourierSeries
from .meyer import WaveletCoeffs, analyze, synthesize
from .model import ChannelSet, ObservationSet, laplacian_kernel, simulate
from .signals import mise, psnr, test_function

__version__ = "0.1.0"

__all__ = [
    "LAMBDA_STAR",
    "METHODS",
    "ChannelSet",
    "CoverageError",
    "EstimatorConfig",
    "ExperimentSpec",
    "FourierSeries",
    "ObservationSet",
    "RateQuery",
    "WaveletCoeffs",
    "WaveletDeconvolver",
    "analyze",
    "estimate",
    "laplacian_kernel",
    "level_plan",
    "lower_bound_exponent",
    "mise",
    "psnr",
    "rate_sweep",
    "rho_star",
    "run_experiment",
    "simulate",
    "synthesize",
    "test_function",
    "theoretical_exponent",
]
