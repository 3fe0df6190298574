"""Filter functions ``g_lam`` with qualification, their residuals, and grid checks.

Three families are provided:

* ``spectral_cutoff``: ``g(u) = 1/u`` for ``u >= lam`` and ``0`` below (TSVD).
* ``gradient``: ``g(u) = sum_{k=1}^t eta (1 - eta u)^(t-k)``, Landweber
  iteration with ``t`` steps. The regularization level is not free:
  ``lam = 1 / (eta t)``.
* ``iterated_ridge``: ``g(u) = sum_{i=1}^l lam^(i-1) (lam + u)^(-i)``;
  ``l = 1`` is ridge regression.

Each :class:`FilterSpec` carries the qualification ``tau`` and the two
constants ``E`` (bound on ``u^alpha g(u) lam^(1-alpha)``, alpha in [0, 1]) and
``F_tau`` (bound on ``|1 - u g(u)| u^alpha lam^(-alpha)``, alpha in [0, tau]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

KINDS = ("spectral_cutoff", "gradient", "iterated_ridge")
AXIOM_RTOL = 1e-9


class FilterError(ValueError):
    """Invalid filter parameters or evaluation arguments."""


class QualificationError(FilterError):
    """The qualification of a filter cannot cover the requested index function."""


def default_qualification(zeta: float) -> float:
    """Declared finite qualification for filters whose true qualification is infinite."""
    return max(1.0, zeta) + 1.0


def gradient_residual_constant(tau: float) -> float:
    return (tau / math.e) ** tau


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    tau: float
    E: float
    F_tau: float
    eta: Optional[float] = None
    depth: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FilterError(f"unknown filter kind {self.kind!r}; expected one of {KINDS}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise FilterError("qualification must be a positive finite number")
        if self.kind == "spectral_cutoff":
            expected = (1.0, 1.0)
        elif self.kind == "gradient":
            if self.eta is None or not self.eta > 0:
                raise FilterError("gradient filter needs a positive step size eta")
            expected = (1.0, gradient_residual_constant(self.tau))
        else:
            if self.depth is None or int(self.depth) != self.depth or self.depth < 1:
                raise FilterError("iterated ridge needs an integer depth l >= 1")
            if self.tau != self.depth:
                raise FilterError("iterated ridge of depth l has qualification l")
            expected = (float(self.depth), 1.0)
        if not (math.isclose(self.E, expected[0]) and math.isclose(self.F_tau, expected[1])):
            raise FilterError(
                f"{self.kind} constants must be E={expected[0]}, F_tau={expected[1]}; "
                f"got E={self.E}, F_tau={self.F_tau}"
            )

    # Constructors ------------------------------------------------------------
    @classmethod
    def spectral_cutoff(cls, tau: float = 2.0) -> "FilterSpec":
        return cls("spectral_cutoff", float(tau), 1.0, 1.0)

    @classmethod
    def gradient(cls, eta: float, tau: float = 2.0) -> "FilterSpec":
        return cls("gradient", float(tau), 1.0, gradient_residual_constant(tau), eta=float(eta))

    @classmethod
    def iterated_ridge(cls, depth: int = 1) -> "FilterSpec":
        return cls("iterated_ridge", float(depth), float(depth), 1.0, depth=int(depth))

    @classmethod
    def ridge(cls) -> "FilterSpec":
        return cls.iterated_ridge(1)

    @property
    def name(self) -> str:
        if self.kind == "gradient":
            return f"gradient(eta={self.eta:g})"
        if self.kind == "iterated_ridge":
            return f"iterated_ridge(l={self.depth})"
        return "spectral_cutoff"

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "tau": self.tau, "E": self.E, "F_tau": self.F_tau}
        if self.eta is not None:
            d["eta"] = self.eta
        if self.depth is not None:
            d["depth"] = self.depth
        return d


# Regularization level ----------------------------------------------------------


def gradient_iterations(eta: float, lam: float) -> int:
    """Smallest ``t`` with ``1/(eta t) <= lam``."""
    x = 1.0 / (eta * lam)
    # Absorb float error so that lam = 1/(eta t) maps back to exactly t.
    return max(1, math.ceil(x * (1.0 - 1e-12)))


def realized_lambda(spec: FilterSpec, lam: float) -> float:
    """The regularization level actually applied for a requested ``lam``.

    Identity for cutoff and ridge; for the gradient filter ``lam`` is rounded
    down to ``1/(eta t)`` with integer ``t``.
    """
    _check_lambda(lam)
    if spec.kind == "gradient":
        return 1.0 / (spec.eta * gradient_iterations(spec.eta, lam))
    return float(lam)


def _check_lambda(lam):
    if not (lam > 0 and math.isfinite(lam)):
        raise FilterError(f"lambda must be positive and finite, got {lam}")


def _check_u(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u < 0):
        raise FilterError("filter arguments must be finite and non-negative")
    return u


# Evaluation --------------------------------------------------------------------


def eval_g(spec: FilterSpec, u, lam: float):
    """Evaluate ``g_lam(u)``; ``u`` may be a scalar or an array.

    Removable singularities at ``u = 0`` take their limits: ``eta t`` for the
    gradient filter and ``l / lam`` for iterated ridge.
    """
    _check_lambda(lam)
    arr = _check_u(u)
    if spec.kind == "spectral_cutoff":
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(arr >= lam, 1.0 / np.where(arr > 0, arr, 1.0), 0.0)
    elif spec.kind == "gradient":
        t = gradient_iterations(spec.eta, lam)
        x = spec.eta * arr
        safe = np.where(arr > 0, arr, 1.0)
        # -expm1(t log1p(-x)) avoids cancellation in 1 - (1 - x)^t for small x.
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = -np.expm1(t * np.log1p(-np.minimum(x, 1.0))) / safe
            outside = (1.0 - (1.0 - x) ** t) / safe
        out = np.where(x < 1.0, inside, outside)
        out = np.where(arr > 0, out, spec.eta * t)
    else:
        out = np.zeros_like(arr)
        term = np.ones_like(arr)
        for _ in range(spec.depth):
            term = term / (lam + arr)
            out = out + term
            term = term * lam
    return float(out) if np.ndim(out) == 0 else out


def eval_residual(spec: FilterSpec, u, lam: float):
    """Evaluate ``r_lam(u) = 1 - u g_lam(u)`` from its exact closed form."""
    _check_lambda(lam)
    arr = _check_u(u)
    if spec.kind == "spectral_cutoff":
        out = (arr < lam).astype(float)
    elif spec.kind == "gradient":
        t = gradient_iterations(spec.eta, lam)
        out = (1.0 - spec.eta * arr) ** t
    else:
        out = (lam / (lam + arr)) ** spec.depth
    return float(out) if np.ndim(out) == 0 else out


def as_function(spec: FilterSpec, lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """``u -> g_lam(u)`` as a vectorised callable for :func:`apply_spectral`."""
    return lambda u: eval_g(spec, u, lam)


# Index functions ---------------------------------------------------------------


@dataclass(frozen=True)
class IndexFunction:
    """Source-condition index function.

    By default ``phi(u) = u^zeta``. A custom non-decreasing ``func`` with
    ``func(0) = 0`` may be supplied; ``zeta`` then records an exponent for
    which ``phi(u) u^(-zeta)`` is non-decreasing.
    """

    zeta: float
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.zeta >= 0:
            raise FilterError("index exponent zeta must be non-negative")

    @property
    def is_holder(self) -> bool:
        return self.func is None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.func is None:
            return u**self.zeta
        return np.asarray(self.func(u), dtype=float)

    def validate(self, kappa2: float, n: int = 2000) -> None:
        if self.func is None:
            return
        grid = np.concatenate([[0.0], np.geomspace(1e-8 * kappa2, kappa2, n)])
        vals = self(grid)
        if abs(vals[0]) > 0:
            raise FilterError("index function must vanish at 0")
        if np.any(np.diff(vals) < -1e-12 * np.max(np.abs(vals))):
            raise FilterError("index function must be non-decreasing")


# Grid verification ---------------------------------------------------------------


def default_u_grid(kappa2: float, n: int = 2000) -> np.ndarray:
    return np.geomspace(1e-8 * kappa2, kappa2, n)


def default_lambda_grid(n: int = 20) -> np.ndarray:
    return np.geomspace(1e-4, 1.0, n)


@dataclass(frozen=True)
class AxiomReport:
    filter: str
    E: float
    F_tau: float
    tau: float
    max_bound_g: float  # sup of u^alpha g(u) lam^(1-alpha)
    max_bound_residual: float  # sup of |r(u)| u^alpha lam^(-alpha)
    argmax_residual: tuple  # (u, lam, alpha) attaining max_bound_residual
    tol: float = AXIOM_RTOL

    @property
    def ratio_g(self) -> float:
        return self.max_bound_g / self.E

    @property
    def ratio_residual(self) -> float:
        return self.max_bound_residual / self.F_tau

    @property
    def passed_g(self) -> bool:
        return self.ratio_g <= 1.0 + self.tol

    @property
    def passed_residual(self) -> bool:
        return self.ratio_residual <= 1.0 + self.tol

    @property
    def passed(self) -> bool:
        return self.passed_g and self.passed_residual

    def to_dict(self) -> dict:
        return {
            "name": f"filter_axioms[{self.filter}]",
            "E": self.E,
            "F_tau": self.F_tau,
            "tau": self.tau,
            "max_bound_g": self.max_bound_g,
            "max_bound_residual": self.max_bound_residual,
            "argmax_residual": list(self.argmax_residual),
            "ratio_g": self.ratio_g,
            "ratio_residual": self.ratio_residual,
            "pass": self.passed,
        }


def verify_filter_axioms(
    spec: FilterSpec,
    kappa2: float = 1.0,
    lam_grid=None,
    u_grid=None,
    alpha_grid=None,
    residual_alpha_grid=None,
) -> AxiomReport:
    """Grid maxima of the two filter inequalities, compared against ``E`` and ``F_tau``.

    ``alpha_grid`` defaults to 11 uniform points in [0, 1] and
    ``residual_alpha_grid`` to 11 uniform points in [0, tau]. For the
    gradient filter the realized ``lam = 1/(eta t)`` replaces each grid value.
    """
    if not kappa2 > 0:
        raise FilterError("kappa^2 must be positive")
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    u_grid = default_u_grid(kappa2) if u_grid is None else np.asarray(u_grid, dtype=float)
    alpha_grid = np.linspace(0.0, 1.0, 11) if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    if residual_alpha_grid is None:
        residual_alpha_grid = np.linspace(0.0, spec.tau, 11)
    residual_alpha_grid = np.asarray(residual_alpha_grid, dtype=float)
    if np.any(u_grid <= 0) or np.any(u_grid > kappa2 * (1 + 1e-12)):
        raise FilterError("u grid must lie in (0, kappa^2]")
    if np.any(lam_grid <= 0) or np.any(lam_grid > 1):
        raise FilterError("lambda grid must lie in (0, 1]")
    if np.any(alpha_grid < 0) or np.any(alpha_grid > 1):
        raise FilterError("alpha grid must lie in [0, 1]")
    if np.any(residual_alpha_grid < 0) or np.any(residual_alpha_grid > spec.tau):
        raise FilterError("residual alpha grid must lie in [0, tau]")

    lams = np.array([realized_lambda(spec, lam) for lam in lam_grid])
    g = np.stack([eval_g(spec, u_grid, lam) for lam in lam_grid])
    r = np.abs(np.stack([eval_residual(spec, u_grid, lam) for lam in lam_grid]))
    log_u = np.log(u_grid)[None, :]
    log_lam = np.log(lams)[:, None]

    max_g = -np.inf
    for alpha in alpha_grid:
        vals = np.abs(g) * np.exp(alpha * log_u + (1.0 - alpha) * log_lam)
        max_g = max(max_g, float(vals.max()))

    max_r, arg_r = -np.inf, None
    for alpha in residual_alpha_grid:
        vals = r * np.exp(alpha * (log_u - log_lam))
        i, j = np.unravel_index(np.argmax(vals), vals.shape)
        if vals[i, j] > max_r:
            max_r, arg_r = float(vals[i, j]), (float(u_grid[j]), float(lams[i]), float(alpha))

    return AxiomReport(spec.name, spec.E, spec.F_tau, spec.tau, max_g, max_r, arg_r)


@dataclass(frozen=True)
class CoverReport:
    filter: str
    tau: float
    zeta: float
    lam_grid: np.ndarray
    ratios: np.ndarray  # per lambda: inf_u (u^tau / phi(u)) / (lam^tau / phi(lam))
    c: float

    @property
    def certified(self) -> bool:
        return self.c >= 1.0


def verify_qualification_covers(
    spec: FilterSpec, phi: IndexFunction, kappa2: float, lam_grid, n_u: int = 2000
) -> CoverReport:
    """Largest ``c`` with ``c lam^tau / phi(lam) <= inf_{lam <= u <= kappa2} u^tau / phi(u)`` on the grid."""
    if phi.zeta > spec.tau:
        raise QualificationError(
            f"qualification tau={spec.tau} cannot cover phi with zeta={phi.zeta} > tau"
        )
    lam_grid = np.asarray(lam_grid, dtype=float)
    if np.any(lam_grid <= 0) or np.any(lam_grid > kappa2):
        raise FilterError("lambda grid must lie in (0, kappa^2]")
    phi.validate(kappa2)
    ratios = np.empty(lam_grid.shape)
    for k, lam in enumerate(lam_grid):
        u = np.unique(np.concatenate([[lam], np.geomspace(lam, kappa2, n_u)]))
        if phi.is_holder:
            vals = (u / lam) ** (spec.tau - phi.zeta)
        else:
            vals = (u / lam) ** spec.tau * (phi(lam) / phi(u))
        ratios[k] = vals.min()
    return CoverReport(spec.name, spec.tau, phi.zeta, lam_grid, ratios, float(ratios.min()))


def bias_constant(spec: FilterSpec, c: float) -> float:
    """``c_g = F_tau / min(c, 1)``, the residual/source constant."""
    if not c > 0:
        raise FilterError("covering constant must be positive")
    return spec.F_tau / min(c, 1.0)


def residual_source_sup(spec: FilterSpec, phi: IndexFunction, lam: float, a: float, u_grid) -> float:
    """Grid supremum of ``|r_lam(u)| phi(u) u^(-a)``."""
    u_grid = np.asarray(u_grid, dtype=float)
    return float(np.max(np.abs(eval_residual(spec, u_grid, lam)) * phi(u_grid) * u_grid ** (-a)))
