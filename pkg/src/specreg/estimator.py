"""Spectral estimators ``w = g_lam(T_x) S_x^* y`` in primal and dual form.

With ``X`` the ``n x d`` input matrix, ``T_x = X^T X / n`` and
``S_x^* y = X^T y / n``. The dual route uses ``g(S_x^* S_x) S_x^* =
S_x^* g(S_x S_x^*)`` with ``S_x S_x^* = K / n``, so that
``alpha = g_lam(K / n) y / n`` and ``f(x) = sum_i alpha_i K(x_i, x)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .filters import FilterSpec, as_function, realized_lambda
from .spectral_core import (
    EigenSystem,
    SymMatrix,
    apply_spectral,
    cross_kernel,
    gram_matrix,
    linear_kernel,
    sym_eigendecompose,
)


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """``n`` samples. ``inputs`` is an ``(n, d)`` array, or any sequence of
    points when a ``kernel`` is given."""

    inputs: object
    outputs: np.ndarray
    kernel: Optional[Callable] = None
    kappa2: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.outputs, dtype=float).ravel()
        if y.size == 0:
            raise EstimatorError("dataset needs at least one sample")
        if not np.all(np.isfinite(y)):
            raise EstimatorError("outputs must be finite")
        object.__setattr__(self, "outputs", y)
        if self.kernel is None:
            x = np.asarray(self.inputs, dtype=float)
            if x.ndim == 1:
                x = x[:, None]
            if x.ndim != 2 or x.shape[0] != y.size:
                raise EstimatorError(f"inputs of shape {x.shape} do not match {y.size} outputs")
            if not np.all(np.isfinite(x)):
                raise EstimatorError("inputs must be finite")
            object.__setattr__(self, "inputs", x)
            sq = np.einsum("ij,ij->i", x, x)
        else:
            if len(self.inputs) != y.size:
                raise EstimatorError("number of inputs and outputs differ")
            sq = np.array([self.kernel(p, p) for p in self.inputs])
        observed = float(sq.max())
        if self.kappa2 and observed > self.kappa2 * (1 + 1e-12):
            raise EstimatorError(f"max |x|^2 = {observed} exceeds the declared kappa^2 = {self.kappa2}")
        if not self.kappa2:
            object.__setattr__(self, "kappa2", observed)

    @property
    def n(self) -> int:
        return self.outputs.size

    @property
    def d(self) -> Optional[int]:
        return None if self.kernel is not None else self.inputs.shape[1]


@dataclass(frozen=True)
class SpectralEstimator:
    mode: str  # "primal" | "dual"
    lam: float
    lam_realized: float
    filter: FilterSpec
    coef: np.ndarray  # primal weights w in R^d, or dual alpha in R^n
    train_inputs: object = None
    kernel: Optional[Callable] = None

    @property
    def weights(self) -> np.ndarray:
        """Primal weights; for a linear-kernel dual fit they are ``X^T alpha``."""
        if self.mode == "primal":
            return self.coef
        if self.kernel is not linear_kernel:
            raise EstimatorError("primal weights exist only for the linear kernel")
        return np.asarray(self.train_inputs).T @ self.coef


def check_lambda(lam: float, n: int) -> None:
    if not (1.0 / n <= lam <= 1.0):
        raise EstimatorError(f"lambda={lam} outside the admissible interval [1/n, 1] = [{1.0 / n}, 1] for n={n}")


def _covariance(x: np.ndarray) -> SymMatrix:
    t = x.T @ x / x.shape[0]
    return SymMatrix(np.triu(t) + np.triu(t, 1).T)


def fit_primal(data: Dataset, filt: FilterSpec, lam: float, eig: Optional[EigenSystem] = None) -> SpectralEstimator:
    """Primal fit in ``R^d``. ``eig`` may carry a precomputed decomposition of ``T_x``."""
    if data.kernel is not None:
        raise EstimatorError("primal fitting needs explicit vector inputs")
    check_lambda(lam, data.n)
    x = data.inputs
    if eig is None:
        eig = sym_eigendecompose(_covariance(x))
    rhs = x.T @ data.outputs / data.n
    w = apply_spectral(eig, as_function(filt, lam), rhs)
    return SpectralEstimator("primal", lam, realized_lambda(filt, lam), filt, w)


def fit_dual(data: Dataset, filt: FilterSpec, lam: float, eig: Optional[EigenSystem] = None) -> SpectralEstimator:
    """Dual fit; ``eig`` may carry a precomputed decomposition of ``K / n``."""
    check_lambda(lam, data.n)
    kernel = data.kernel or linear_kernel
    if eig is None:
        k = gram_matrix(kernel, data.inputs).entries
        eig = sym_eigendecompose(k / data.n)
    alpha = apply_spectral(eig, as_function(filt, lam), data.outputs) / data.n
    return SpectralEstimator("dual", lam, realized_lambda(filt, lam), filt, alpha, data.inputs, kernel)


def fit(data: Dataset, filt: FilterSpec, lam: float) -> SpectralEstimator:
    """Primal when inputs are explicit vectors with ``d <= n``, dual otherwise."""
    if data.kernel is None and data.d <= data.n:
        return fit_primal(data, filt, lam)
    return fit_dual(data, filt, lam)


def predict(est: SpectralEstimator, x) -> np.ndarray | float:
    """Evaluate the fitted function at one point or a batch of points."""
    if est.mode == "primal":
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != est.coef.size:
            raise EstimatorError(f"input dimension {arr.shape[-1]} does not match {est.coef.size}")
        out = arr @ est.coef
        return float(out) if np.ndim(out) == 0 else out
    if est.kernel is linear_kernel and isinstance(est.train_inputs, np.ndarray):
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != est.train_inputs.shape[1]:
            raise EstimatorError("input dimension does not match the training inputs")
        out = cross_kernel(linear_kernel, est.train_inputs, np.atleast_2d(arr)) @ est.coef
        return float(out[0]) if arr.ndim == 1 else out
    single = not (isinstance(x, (list, tuple)) or (isinstance(x, np.ndarray) and x.ndim == 2))
    queries = [x] if single else list(x)
    out = cross_kernel(est.kernel, est.train_inputs, queries) @ est.coef
    return float(out[0]) if single else out


def gradient_descent_reference(data: Dataset, eta: float, t: int) -> SpectralEstimator:
    """Explicit Landweber iteration ``w <- w - eta (T_x w - S_x^* y)`` from ``w = 0``.

    Independent of the spectral route; used to check the gradient filter.
    """
    if data.kernel is not None:
        raise EstimatorError("reference iteration works on explicit vector inputs")
    if not (0 < eta <= 1.0 / data.kappa2 * (1 + 1e-12)):
        raise EstimatorError(f"step size must lie in (0, 1/kappa^2] = (0, {1.0 / data.kappa2}]")
    if int(t) != t or t < 1:
        raise EstimatorError("iteration count must be a positive integer")
    x, y, n = data.inputs, data.outputs, data.n
    rhs = x.T @ y / n
    w = np.zeros(x.shape[1])
    for _ in range(int(t)):
        w = w - eta * (x.T @ (x @ w) / n - rhs)
    lam = 1.0 / (eta * t)
    filt = FilterSpec.gradient(eta)
    return SpectralEstimator("primal", lam, lam, filt, w)


# CSV ingestion -------------------------------------------------------------------


def read_csv(path: str | Path, kappa2: float = 0.0) -> Dataset:
    """One row per sample: features then label. A header row is skipped if present."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if k == 0:
                    continue
                raise EstimatorError(f"{path}: non-numeric value in row {k + 1}")
    if not rows:
        raise EstimatorError(f"{path}: no samples")
    if len({len(r) for r in rows}) != 1:
        raise EstimatorError(f"{path}: rows have differing lengths")
    arr = np.array(rows)
    if arr.shape[1] < 2:
        raise EstimatorError(f"{path}: need at least one feature column and a label")
    return Dataset(arr[:, :-1], arr[:, -1], kappa2=kappa2)


def write_csv(path: str | Path, inputs: np.ndarray, outputs: Sequence[float]) -> None:
    inputs = np.asarray(inputs, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(inputs.shape[1])] + ["y"])
        for xi, yi in zip(inputs, outputs):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
