"""Convergence-rate and lambda-sweep experiments on the diagonal model.

Each ``(n, trial)`` task samples a batch with a seed derived from the master
seed, fits the spectral estimator, and measures ``|L^-a (f_hat - f_H)|_rho``
exactly. Per-n medians are regressed on ``log n`` to estimate the decay
exponent, which is compared against ``(zeta - a) / (2 zeta + gamma)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .estimator import Dataset, _covariance, fit_dual, fit_primal
from .filters import FilterSpec, realized_lambda
from .reporting import map_trials
from .spectral_core import sym_eigendecompose
from .synthetic import DiagonalModel, derive_seed, make_model, sample, weighted_rho_norm


class ExperimentError(ValueError):
    pass


# Regularization schedules ----------------------------------------------------------


@dataclass(frozen=True)
class LambdaRule:
    """``corollary``: ``n^(-1/max(1, 2 zeta + gamma))``; ``theta(t)``: ``n^(t - 1)``; ``fixed(v)``."""

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("corollary", "theta", "fixed"):
            raise ExperimentError(f"unknown lambda rule {self.kind!r}")
        if self.kind == "theta" and not (self.value is not None and 0 <= self.value <= 1):
            raise ExperimentError(f"theta must lie in [0, 1], got {self.value}")
        if self.kind == "fixed" and not (self.value is not None and self.value > 0):
            raise ExperimentError("fixed lambda must be positive")

    @classmethod
    def parse(cls, text: str) -> "LambdaRule":
        text = text.strip()
        if text == "corollary":
            return cls("corollary")
        m = re.fullmatch(r"(theta|fixed)\(\s*([0-9.eE+-]+)\s*\)", text)
        if not m:
            raise ExperimentError(f"cannot parse lambda rule {text!r}")
        return cls(m.group(1), float(m.group(2)))

    def __call__(self, n: int, zeta: float, gamma: float) -> float:
        if self.kind == "corollary":
            return float(n) ** (-1.0 / max(1.0, 2 * zeta + gamma))
        if self.kind == "theta":
            return float(n) ** (self.value - 1.0)
        return float(self.value)

    def __str__(self) -> str:
        return self.kind if self.kind == "corollary" else f"{self.kind}({self.value:g})"


def theoretical_exponent(zeta: float, gamma: float, a: float) -> tuple[float, bool]:
    """Decay exponent of the minimax rate and whether the log-factor branch applies."""
    if 2 * zeta + gamma > 1:
        return (zeta - a) / (2 * zeta + gamma), False
    return zeta - a, True


def fit_loglog_slope(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """OLS of ``log error`` on ``log n``; returns ``(decay exponent, standard error)``.

    The exponent is the negated regression slope.
    """
    if len(pairs) < 3:
        raise ExperimentError("slope fitting needs at least 3 (n, error) pairs")
    ns, errs = np.array(pairs, dtype=float).T
    if np.any(errs <= 0) or np.any(ns <= 0):
        raise ExperimentError("errors must be positive; zero error suggests exact recovery, use the noiseless branch")
    res = stats.linregress(np.log(ns), np.log(errs))
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    return -float(res.slope), stderr


# Fitting one trial ------------------------------------------------------------------


def _eigensystem(x: np.ndarray):
    """Decompose the smaller of ``T_x`` (d x d) and ``K/n`` (n x n)."""
    n, d = x.shape
    if d <= n:
        return "primal", sym_eigendecompose(_covariance(x))
    k = x @ x.T
    k = np.triu(k) + np.triu(k, 1).T
    return "dual", sym_eigendecompose(k / n)


def _weights(data: Dataset, mode: str, eig, filt: FilterSpec, lam: float) -> np.ndarray:
    if mode == "primal":
        return fit_primal(data, filt, lam, eig=eig).coef
    return fit_dual(data, filt, lam, eig=eig).weights


def _trial_errors(model, filt, n, lams, a_values, seed) -> np.ndarray:
    """Errors for every ``lam`` in ``lams`` (rows) and ``a`` in ``a_values`` (columns)."""
    batch = sample(model, n, seed)
    data = Dataset(batch.inputs, batch.outputs, kappa2=model.kappa2)
    mode, eig = _eigensystem(batch.inputs)
    out = np.empty((len(lams), len(a_values)))
    for i, lam in enumerate(lams):
        w = _weights(data, mode, eig, filt, lam)
        for j, a in enumerate(a_values):
            out[i, j] = weighted_rho_norm(model, w, a)
    return out


# Rate experiments -------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    gamma: float = 0.5
    zeta: float = 1.0
    R: float = 1.0
    d: int = 2000
    noise_sd: float = 0.3
    g0_profile: str = "flat_normalized"
    filter: FilterSpec = field(default_factory=lambda: FilterSpec.iterated_ridge(2))
    a: float = 0.0
    n_grid: tuple = (64, 128, 256, 512, 1024, 2048, 4096)
    trials: int = 50
    lambda_rule: LambdaRule = field(default_factory=lambda: LambdaRule("corollary"))
    seed: int = 0
    threads: int = 1
    slope_tolerance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if len(self.n_grid) < 3:
            raise ExperimentError("n_grid needs at least 3 sample sizes to fit a slope")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ExperimentError("n_grid must be strictly increasing")
        if self.trials < 10:
            raise ExperimentError("need at least 10 trials per sample size")
        bad = [n for n in self.n_grid if not (1.0 / n <= self.lam(n) <= 1.0)]
        if bad:
            raise ExperimentError(f"lambda rule {self.lambda_rule} leaves [1/n, 1] for n in {bad}")
        if not (0 <= self.a <= min(0.5, self.zeta)):
            raise ExperimentError(f"a={self.a} must lie in [0, min(1/2, zeta)]")

    def lam(self, n: int) -> float:
        return self.lambda_rule(n, self.zeta, self.gamma)

    def model(self) -> DiagonalModel:
        return make_model(self.gamma, self.zeta, self.R, self.d, self.noise_sd, self.g0_profile)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "zeta": self.zeta,
            "R": self.R,
            "d": self.d,
            "noise_sd": self.noise_sd,
            "g0_profile": self.g0_profile,
            "filter": self.filter.to_dict(),
            "a": self.a,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "lambda_rule": str(self.lambda_rule),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class RateReport:
    config: dict
    a: float
    n_grid: tuple
    lambdas: tuple
    lambdas_realized: tuple
    errors: np.ndarray = field(repr=False)  # (len(n_grid), trials)
    slope: float
    slope_stderr: float
    fit_n: tuple
    theoretical_exponent: float
    log_factor_regime: bool
    slope_tolerance: float | None = None

    @property
    def medians(self) -> np.ndarray:
        return np.median(self.errors, axis=1)

    @property
    def iqr(self) -> np.ndarray:
        q1, q3 = np.percentile(self.errors, [25, 75], axis=1)
        return q3 - q1

    @property
    def slope_ok(self) -> bool | None:
        if self.slope_tolerance is None:
            return None
        return abs(self.slope - self.theoretical_exponent) <= self.slope_tolerance

    @property
    def passed(self) -> bool:
        return self.slope_ok is not False

    csv_header = ("n", "trial", "error", "lambda_realized")

    def csv_rows(self):
        for i, n in enumerate(self.n_grid):
            for k, e in enumerate(self.errors[i]):
                yield (n, k, float(e), self.lambdas_realized[i])

    def to_dict(self) -> dict:
        return {
            "name": "rate",
            "grid": {"n_grid": list(self.n_grid), "fit_n": list(self.fit_n), "a": self.a},
            "ratio": (abs(self.slope - self.theoretical_exponent) / self.slope_tolerance
                      if self.slope_tolerance else None),
            "pass": self.passed,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "theoretical_exponent": self.theoretical_exponent,
            "log_factor_regime": self.log_factor_regime,
            "slope_tolerance": self.slope_tolerance,
            "per_n": [
                {"n": n, "lambda": l, "lambda_realized": lr, "median": float(m), "iqr": float(q)}
                for n, l, lr, m, q in zip(self.n_grid, self.lambdas, self.lambdas_realized, self.medians, self.iqr)
            ],
            "config": self.config,
        }


def run_rate_experiments(config: ExperimentConfig, a_values: Sequence[float]) -> dict[float, RateReport]:
    """Run one experiment and score it under several norm exponents ``a``.

    Fits are shared across ``a`` values; only the error functional changes.
    """
    for a in a_values:
        if not (0 <= a <= min(0.5, config.zeta)):
            raise ExperimentError(f"a={a} must lie in [0, min(1/2, zeta)]")
    model = config.model()
    filt = config.filter
    if filt.kind == "gradient" and filt.eta > 1.0 / model.kappa2 * (1 + 1e-12):
        raise ExperimentError(f"gradient step {filt.eta} exceeds 1/kappa^2 = {1.0 / model.kappa2}")
    lams = [config.lam(n) for n in config.n_grid]
    realized = [realized_lambda(filt, lam) for lam in lams]
    tasks = [(i, n, k) for i, n in enumerate(config.n_grid) for k in range(config.trials)]

    def run(task):
        i, n, k = task
        return _trial_errors(model, filt, n, [lams[i]], a_values, derive_seed(config.seed, n, k))[0]

    results = map_trials(run, tasks, config.threads)
    errs = np.array(results).reshape(len(config.n_grid), config.trials, len(a_values))

    n_fit = max(3, math.ceil(2 * len(config.n_grid) / 3))
    fit_idx = list(range(len(config.n_grid) - n_fit, len(config.n_grid)))
    reports = {}
    for j, a in enumerate(a_values):
        e = errs[:, :, j]
        med = np.median(e, axis=1)
        slope, se = fit_loglog_slope([(config.n_grid[i], med[i]) for i in fit_idx])
        expo, log_regime = theoretical_exponent(config.zeta, config.gamma, a)
        tol = config.slope_tolerance
        if tol is not None and log_regime:
            tol = max(tol, 0.15)
        cfg = config.to_dict() | {"a": a}
        reports[a] = RateReport(cfg, float(a), config.n_grid, tuple(lams), tuple(realized), e, slope, se,
                                tuple(config.n_grid[i] for i in fit_idx), expo, log_regime, tol)
    return reports


def run_rate_experiment(config: ExperimentConfig) -> RateReport:
    return run_rate_experiments(config, [config.a])[config.a]


# Lambda sweeps ------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepReport:
    n: int
    a: float
    lambdas: np.ndarray
    lambdas_realized: np.ndarray
    errors: np.ndarray = field(repr=False)  # (trials, len(lambdas))
    model: dict = field(default_factory=dict)

    @property
    def medians(self) -> np.ndarray:
        return np.median(self.errors, axis=0)

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.medians))

    @property
    def argmin_lambda(self) -> float:
        return float(self.lambdas[self.argmin])

    @property
    def interior_minimum(self) -> bool:
        """U-shape witness: the minimum is strictly inside the grid."""
        return 0 < self.argmin < len(self.lambdas) - 1

    def non_decreasing_from(self, start: int = 1) -> bool:
        m = self.medians[start:]
        return bool(np.all(np.diff(m) >= 0))

    csv_header = ("lambda", "trial", "error", "lambda_realized")

    def csv_rows(self):
        for i, lam in enumerate(self.lambdas):
            for k in range(self.errors.shape[0]):
                yield (float(lam), k, float(self.errors[k, i]), float(self.lambdas_realized[i]))

    def to_dict(self) -> dict:
        return {
            "name": "lambda_sweep",
            "grid": {"n": self.n, "a": self.a, "lambdas": [float(x) for x in self.lambdas]},
            "ratio": None,
            "pass": True,
            "medians": [float(x) for x in self.medians],
            "argmin_lambda": self.argmin_lambda,
            "interior_minimum": self.interior_minimum,
            "model": self.model,
        }


def run_lambda_sweep(model: DiagonalModel, filt: FilterSpec, n: int, lam_grid, a: float, trials: int,
                     seed: int, threads: int = 1) -> SweepReport:
    """Median error across trials for every ``lam`` on the grid.

    One eigendecomposition per trial serves the whole grid. Trial ``k``
    uses the seed derived from ``(seed, n, k)``, so sweeps of two models
    differing only in noise level see identical inputs.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    bad = [float(l) for l in lam_grid if not (1.0 / n <= l <= 1.0)]
    if bad:
        raise ExperimentError(f"lambda values {bad} outside [1/n, 1] for n={n}")
    if not (0 <= a <= min(0.5, model.zeta)):
        raise ExperimentError(f"a={a} must lie in [0, min(1/2, zeta)]")
    realized = np.array([realized_lambda(filt, l) for l in lam_grid])
    res = map_trials(lambda k: _trial_errors(model, filt, n, lam_grid, [a], derive_seed(seed, n, k))[:, 0],
                     list(range(trials)), threads)
    return SweepReport(int(n), float(a), lam_grid, realized, np.array(res), model.to_dict())
