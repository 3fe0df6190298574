"""Dense symmetric eigendecomposition and scalar spectral calculus.

Every matrix function used by the estimators (``g(T_x)``, ``g(K / n)``) goes
through :func:`sym_eigendecompose` followed by :func:`apply_spectral`. There
is no iterative approximation anywhere; at desk scale the dense ``O(n^3)``
route is cheap enough and exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10


class SpectralError(ValueError):
    """Raised for malformed inputs to the spectral routines."""


class EigenConvergenceError(RuntimeError):
    """The symmetric eigensolver did not converge."""

    def __init__(self, dim: int):
        super().__init__(f"eigendecomposition failed to converge for a {dim}x{dim} matrix")
        self.dim = dim


@dataclass(frozen=True)
class SymMatrix:
    """A real symmetric matrix, validated on construction.

    ``psd=True`` additionally asserts that every eigenvalue is at least
    ``-1e-10`` times the largest eigenvalue magnitude; use it for Gram and
    covariance matrices.
    """

    entries: np.ndarray
    psd: bool = False

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise SpectralError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise SpectralError("matrix has non-finite entries")
        scale = np.max(np.abs(a))
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_RTOL * max(scale, 1.0):
            raise SpectralError("matrix is not symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.psd:
            s = np.linalg.eigvalsh(a)
            if s[0] < -PSD_RTOL * max(np.max(np.abs(s)), np.finfo(float).tiny):
                raise SpectralError(f"matrix is not PSD: smallest eigenvalue {s[0]:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted non-increasing.

    ``eigenvectors[:, i]`` is the unit eigenvector for ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    def clamped(self) -> np.ndarray:
        """Eigenvalues with roundoff negatives set to zero."""
        return np.maximum(self.eigenvalues, 0.0)


def sym_eigendecompose(a: SymMatrix | np.ndarray) -> EigenSystem:
    """Eigendecompose a symmetric matrix with LAPACK ``syevd``.

    The result is deterministic for a fixed input. Eigenvalues are returned
    in descending order.
    """
    if not isinstance(a, SymMatrix):
        a = SymMatrix(a)
    try:
        s, v = np.linalg.eigh(a.entries)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(a.dim) from exc
    s = s[::-1].copy()
    v = v[:, ::-1].copy()
    s.setflags(write=False)
    v.setflags(write=False)
    return EigenSystem(s, v)


def spectral_weights(eig: EigenSystem, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate ``f`` on the clamped eigenvalues, checking finiteness."""
    w = np.asarray(f(eig.clamped()), dtype=float)
    if w.shape != eig.eigenvalues.shape:
        w = np.broadcast_to(w, eig.eigenvalues.shape).astype(float)
    if not np.all(np.isfinite(w)):
        raise SpectralError("spectral function is not finite on the spectrum")
    return w


def apply_spectral(eig: EigenSystem, f: Callable[[np.ndarray], np.ndarray], v: np.ndarray) -> np.ndarray:
    """Return ``f(A) v = sum_i f(s_i) <psi_i, v> psi_i``.

    ``f`` is called once on the vector of eigenvalues (clamped at zero) and
    must be vectorised. ``v`` may also be a matrix whose columns are
    transformed independently.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] != eig.dim:
        raise SpectralError(f"vector has length {v.shape[0]}, eigensystem has dimension {eig.dim}")
    w = spectral_weights(eig, f)
    coeffs = eig.eigenvectors.T @ v
    if coeffs.ndim == 1:
        return eig.eigenvectors @ (w * coeffs)
    return eig.eigenvectors @ (w[:, None] * coeffs)


# Kernels ---------------------------------------------------------------------


def linear_kernel(x, z) -> float:
    return float(np.dot(x, z))


def gaussian_kernel(bandwidth: float = 1.0) -> Callable[[np.ndarray, np.ndarray], float]:
    """``K(x, z) = exp(-|x - z|^2 / (2 h^2))``."""
    if bandwidth <= 0:
        raise SpectralError("bandwidth must be positive")

    def kernel(x, z) -> float:
        diff = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
        return float(np.exp(-np.dot(diff, diff) / (2.0 * bandwidth**2)))

    kernel.bandwidth = bandwidth
    return kernel


def gram_matrix(kernel: Callable, points: Sequence) -> SymMatrix:
    """Gram matrix ``K[i, j] = kernel(x_i, x_j)``, one evaluation per pair.

    The linear kernel on array input takes a vectorised shortcut; the
    result is symmetrised exactly so both routes agree bit for bit on the
    upper and lower triangles.
    """
    n = len(points)
    if n == 0:
        raise SpectralError("no points")
    if kernel is linear_kernel and isinstance(points, np.ndarray):
        x = np.asarray(points, dtype=float)
        if not np.all(np.isfinite(x)):
            raise SpectralError("points have non-finite entries")
        k = x @ x.T
        k = np.triu(k) + np.triu(k, 1).T
    else:
        k = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                val = kernel(points[i], points[j])
                if not np.isfinite(val):
                    raise SpectralError(f"kernel value at ({i}, {j}) is not finite")
                k[i, j] = k[j, i] = val
    return SymMatrix(k)


def cross_kernel(kernel: Callable, train: Sequence, queries: Sequence) -> np.ndarray:
    """Matrix ``C[q, i] = kernel(train_i, query_q)``."""
    if kernel is linear_kernel and isinstance(train, np.ndarray):
        return np.atleast_2d(np.asarray(queries, dtype=float)) @ np.asarray(train, dtype=float).T
    return np.array([[kernel(t, q) for t in train] for q in queries], dtype=float)
