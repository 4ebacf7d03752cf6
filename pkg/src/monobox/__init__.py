"""Adaptive approximation of non-decreasing functions with error certificates.

Refine a monotone black-box function on [0, 1] under any piecewise-constant
probability measure, stop the moment the observable certificate proves the
requested Lp accuracy, and estimate integrals with a stratified randomized
variant.  Ships covering-complexity oracles, adversarial targets, exact
error metering and an experiment CLI.
"""

from .boxcover import (Box, BoxCover, GridSamples, breakpoint_grid,
                       constructive_cover, cover_total, generalized_area,
                       oracle_N, split_cover, width)
from .funcs import (FunctionOracle, OscillatorParams, catalog, experiment_g,
                    oscillator_g, surrounding_pair, worst_case_f)
from .measure import Measure, lebesgue, two_piece
from .metrics import (ChordErrorMeter, QuadratureSpec,
                      affine_error_bound_check, loglog_slope, lp_error,
                      reference_integral)
from .refine import (CoverState, PiecewiseLinearEstimator,
                     ResolutionExhaustedError, RunTrace, SelectionPolicy,
                     backend_name, evaluate_estimator, init, run,
                     run_fixed_budget, step, uniform_trapezoid)
from .stochastic import IntegralRun, deterministic_integral, replicate, run_integral

__version__ = "0.1.0"

__all__ = [
    "Box", "BoxCover", "GridSamples", "breakpoint_grid", "constructive_cover",
    "cover_total", "generalized_area", "oracle_N", "split_cover", "width",
    "FunctionOracle", "OscillatorParams", "catalog", "experiment_g",
    "oscillator_g", "surrounding_pair", "worst_case_f",
    "Measure", "lebesgue", "two_piece",
    "ChordErrorMeter", "QuadratureSpec", "affine_error_bound_check",
    "loglog_slope", "lp_error", "reference_integral",
    "CoverState", "PiecewiseLinearEstimator", "ResolutionExhaustedError",
    "RunTrace", "SelectionPolicy", "backend_name", "evaluate_estimator",
    "init", "run", "run_fixed_budget", "step", "uniform_trapezoid",
    "IntegralRun", "deterministic_integral", "replicate", "run_integral",
    "__version__",
]
