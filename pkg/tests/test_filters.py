import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specreg.filters import (
    FilterError,
    FilterSpec,
    IndexFunction,
    QualificationError,
    default_qualification,
    eval_g,
    eval_residual,
    gradient_iterations,
    bias_constant,
    realized_lambda,
    residual_source_sup,
    verify_filter_axioms,
    verify_qualification_covers,
)

CUTOFF = FilterSpec.spectral_cutoff()
RIDGE = FilterSpec.ridge()


def gradient_sum(eta, t, u):
    """Term-by-term geometric sum, independent of the closed form."""
    return sum(eta * (1 - eta * u) ** (t - k) for k in range(1, t + 1))


def iterated_ridge_sum(lam, l, u):
    return sum(lam ** (i - 1) * (lam + u) ** (-i) for i in range(1, l + 1))


ALL_FILTERS = [CUTOFF, FilterSpec.gradient(1.0), RIDGE, FilterSpec.iterated_ridge(2), FilterSpec.iterated_ridge(3)]


class TestConstants:
    def test_declared_constants(self):
        assert (CUTOFF.E, CUTOFF.F_tau) == (1.0, 1.0)
        g = FilterSpec.gradient(0.5, tau=2)
        assert g.E == 1.0 and g.F_tau == pytest.approx((2 / math.e) ** 2)
        r = FilterSpec.iterated_ridge(3)
        assert (r.tau, r.E, r.F_tau) == (3.0, 3.0, 1.0)

    def test_invariants_enforced(self):
        with pytest.raises(FilterError):
            FilterSpec("spectral_cutoff", 2.0, 2.0, 1.0)
        with pytest.raises(FilterError):
            FilterSpec("iterated_ridge", 2.0, 1.0, 1.0, depth=1)
        with pytest.raises(FilterError):
            FilterSpec("gradient", 2.0, 1.0, 1.0, eta=1.0)
        with pytest.raises(FilterError):
            FilterSpec.gradient(0.0)
        with pytest.raises(FilterError):
            FilterSpec("landweber", 1.0, 1.0, 1.0)

    def test_default_qualification(self):
        assert default_qualification(0.25) == 2.0
        assert default_qualification(1.5) == 2.5


class TestEvaluation:
    def test_cutoff_boundary_inclusive(self):
        assert eval_g(CUTOFF, 0.25, 0.5) == 0.0
        assert eval_g(CUTOFF, 1.0, 0.5) == 1.0
        assert eval_g(CUTOFF, 0.5, 0.5) == 2.0
        assert eval_residual(CUTOFF, 0.5, 0.5) == 0.0
        assert eval_residual(CUTOFF, 0.49, 0.5) == 1.0

    def test_gradient_example(self):
        g = FilterSpec.gradient(1.0)
        assert gradient_sum(1.0, 3, 0.5) == 1.75
        assert eval_g(g, 0.5, 1 / 3) == pytest.approx(1.75, rel=1e-14)
        assert eval_residual(g, 0.5, 1 / 3) == pytest.approx(0.125, rel=1e-14)
        assert eval_g(g, 0.0, 1 / 3) == 3.0

    def test_iterated_ridge_examples(self):
        r2 = FilterSpec.iterated_ridge(2)
        assert iterated_ridge_sum(1.0, 2, 1.0) == 0.75
        assert (1 / 1.0) * (1 - 1.0**2 / 2.0**2) == 0.75
        assert eval_g(r2, 1.0, 1.0) == pytest.approx(0.75, rel=1e-15)
        assert eval_residual(r2, 1.0, 1.0) == pytest.approx(0.25, rel=1e-15)
        assert eval_g(RIDGE, 0.4, 0.1) == pytest.approx(2.0, rel=1e-15)
        assert eval_g(r2, 0.0, 0.5) == pytest.approx(4.0)

    def test_rejections(self):
        for f in ALL_FILTERS:
            with pytest.raises(FilterError):
                eval_g(f, -0.1, 0.5)
            with pytest.raises(FilterError):
                eval_g(f, 0.1, 0.0)
            with pytest.raises(FilterError):
                eval_residual(f, 0.1, -1.0)

    def test_realized_lambda(self):
        g = FilterSpec.gradient(0.5)
        assert gradient_iterations(0.5, 0.3) == 7
        assert realized_lambda(g, 0.3) == pytest.approx(1 / 3.5)
        assert realized_lambda(g, 1 / (0.5 * 8)) == pytest.approx(0.25)
        assert realized_lambda(RIDGE, 0.3) == 0.3

    def test_array_input(self):
        u = np.array([0.0, 0.1, 1.0])
        for f in ALL_FILTERS:
            out = eval_g(f, u, 0.2)
            assert out.shape == (3,)
            assert out[1] == pytest.approx(eval_g(f, 0.1, 0.2))

    @settings(max_examples=200, deadline=None)
    @given(u=st.floats(0, 1), lam=st.floats(1e-4, 1), which=st.integers(0, len(ALL_FILTERS) - 1))
    def test_residual_identity(self, u, lam, which):
        f = ALL_FILTERS[which]
        assert eval_residual(f, u, lam) + u * eval_g(f, u, lam) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(u=st.floats(1e-6, 1), eta=st.floats(0.05, 1), t=st.integers(1, 200))
    def test_gradient_sum_identity(self, u, eta, t):
        g = FilterSpec.gradient(eta)
        assert eval_g(g, u, 1 / (eta * t)) == pytest.approx(gradient_sum(eta, t, u), rel=1e-10)


class TestAxioms:
    def test_cutoff(self):
        rep = verify_filter_axioms(CUTOFF)
        assert rep.max_bound_g <= 1 + 1e-9 and rep.max_bound_residual <= 1 + 1e-9
        assert rep.passed

    def test_iterated_ridge(self):
        for l in (1, 2, 3):
            rep = verify_filter_axioms(FilterSpec.iterated_ridge(l))
            assert rep.max_bound_g <= l * (1 + 1e-9)
            assert rep.passed

    def test_gradient_first_inequality_holds(self):
        rep = verify_filter_axioms(FilterSpec.gradient(1.0), lam_grid=1.0 / np.arange(1, 65))
        assert rep.passed_g

    def test_gradient_residual_constant_below_one_fails_at_alpha_zero(self):
        # |1 - u g(u)| -> 1 as u -> 0, so any constant below 1 is violated at alpha = 0.
        rep = verify_filter_axioms(FilterSpec.gradient(1.0, tau=2), lam_grid=1.0 / np.arange(1, 65))
        assert rep.max_bound_residual == pytest.approx(1.0, abs=1e-6)
        assert rep.argmax_residual[2] == 0.0
        assert not rep.passed_residual

    @pytest.mark.parametrize("tau", [1.0, 2.0, 3.0])
    def test_gradient_residual_at_top_exponent(self, tau):
        rep = verify_filter_axioms(
            FilterSpec.gradient(1.0, tau=tau), lam_grid=1.0 / np.arange(1, 65), residual_alpha_grid=[tau]
        )
        assert rep.max_bound_residual <= (tau / math.e) ** tau * (1 + 1e-9)

    def test_grid_validation(self):
        with pytest.raises(FilterError):
            verify_filter_axioms(RIDGE, u_grid=[0.0, 0.5])
        with pytest.raises(FilterError):
            verify_filter_axioms(RIDGE, lam_grid=[2.0])
        with pytest.raises(FilterError):
            verify_filter_axioms(RIDGE, residual_alpha_grid=[2.0])


class TestQualification:
    def test_linear_index_exact(self):
        rep = verify_qualification_covers(RIDGE, IndexFunction(1.0), 1.0, [0.01, 0.1, 1.0])
        assert rep.c == 1.0

    def test_sqrt_index(self):
        rep = verify_qualification_covers(FilterSpec.iterated_ridge(2), IndexFunction(0.5), 1.0, [0.1, 0.5])
        assert rep.certified and rep.c >= 1.0

    def test_rejects_zeta_above_tau(self):
        with pytest.raises(QualificationError):
            verify_qualification_covers(RIDGE, IndexFunction(2.0), 1.0, [0.1])

    def test_custom_index_function(self):
        phi = IndexFunction(0.5, func=lambda u: np.sqrt(u) * (1 + u))
        rep = verify_qualification_covers(FilterSpec.iterated_ridge(2), phi, 1.0, np.geomspace(1e-3, 1, 10))
        # u^2 / (sqrt(u)(1+u)) is increasing on (0, 1], so the infimum sits at u = lam.
        assert rep.c == pytest.approx(1.0)
        with pytest.raises(FilterError):
            IndexFunction(0.5, func=lambda u: 1 - u).validate(1.0)

    @pytest.mark.parametrize("filt", ALL_FILTERS, ids=lambda f: f.name)
    @pytest.mark.parametrize("zeta", [0.25, 0.5, 1.0])
    def test_residual_source_bound(self, filt, zeta):
        if zeta > filt.tau:
            pytest.skip("qualification does not cover zeta")
        phi = IndexFunction(zeta)
        lams = np.geomspace(1e-3, 1, 15)
        c = verify_qualification_covers(filt, phi, 1.0, [realized_lambda(filt, l) for l in lams]).c
        # Gradient residuals reach 1 near u = 0, so its usable constant is max(F_tau, 1).
        c_g = max(bias_constant(filt, c), 1.0)
        u = np.geomspace(1e-8, 1.0, 2000)
        for lam in lams:
            lr = realized_lambda(filt, lam)
            for a in np.linspace(0, zeta, 5):
                sup = residual_source_sup(filt, phi, lam, a, u)
                assert sup <= c_g * lr ** (zeta - a) * (1 + 1e-9)
