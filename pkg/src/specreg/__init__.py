"""Spectral regularization for least-squares regression, with a synthetic
sequence-space model for checking bias bounds and convergence rates."""

from .filters import FilterSpec, IndexFunction, eval_g, eval_residual
from .estimator import Dataset, SpectralEstimator, fit, fit_dual, fit_primal, predict
from .synthetic import DiagonalModel, make_model, sample
from .harness import ExperimentConfig, LambdaRule, run_lambda_sweep, run_rate_experiment

__all__ = [
    "Dataset",
    "DiagonalModel",
    "ExperimentConfig",
    "FilterSpec",
    "IndexFunction",
    "LambdaRule",
    "SpectralEstimator",
    "eval_g",
    "eval_residual",
    "fit",
    "fit_dual",
    "fit_primal",
    "make_model",
    "predict",
    "run_lambda_sweep",
    "run_rate_experiment",
    "sample",
]
