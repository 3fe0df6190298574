import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specreg.estimator import (
    Dataset,
    EstimatorError,
    fit,
    fit_dual,
    fit_primal,
    gradient_descent_reference,
    predict,
    read_csv,
    write_csv,
)
from specreg.filters import FilterSpec
from specreg.spectral_core import gaussian_kernel, gram_matrix, linear_kernel

RIDGE = FilterSpec.ridge()
CUTOFF = FilterSpec.spectral_cutoff()


def random_data(seed, n, d):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, d)) / np.sqrt(d)
    y = x @ rng.standard_normal(d) + 0.1 * rng.standard_normal(n)
    return Dataset(x, y)


class TestExamples:
    def test_zero_outputs(self):
        data = Dataset(np.random.default_rng(0).standard_normal((5, 3)), np.zeros(5))
        for f in (fit_primal, fit_dual):
            est = f(data, RIDGE, 0.5)
            assert np.all(est.coef == 0)
            assert predict(est, np.ones(3)) == 0.0

    def test_scalar_ridge_and_cutoff(self):
        data = Dataset(np.array([[1.0], [1.0]]), np.array([1.0, 3.0]))
        # T_x = 1, S_x^* y = 2
        assert fit_primal(data, RIDGE, 1.0).coef[0] == pytest.approx(1.0, rel=1e-15)
        assert fit_primal(data, CUTOFF, 0.5).coef[0] == pytest.approx(2.0, rel=1e-15)

    def test_dual_scalar(self):
        data = Dataset(np.array([[1.0]]), np.array([2.0]))
        est = fit_dual(data, RIDGE, 1.0)
        # n = 1 forces lam = 1: alpha = 2 / (1 + 1)
        assert est.coef[0] == pytest.approx(1.0)
        # lam = 0.5 would give alpha = 2 / 1.5 but lies outside [1/n, 1] for n = 1
        with pytest.raises(EstimatorError):
            fit_dual(data, RIDGE, 0.5)

    def test_dual_prediction_example(self):
        est = fit_dual(Dataset(np.array([[1.0], [1.0]]), np.array([2.0, 2.0])), RIDGE, 0.5)
        # K/n has eigenvalue 1 on (1,1)/sqrt2: alpha_i = (1/2) * 2 / 1.5 = 2/3, f(x) = 2 * (2/3) * x
        np.testing.assert_allclose(est.coef, [2 / 3, 2 / 3])
        assert predict(est, np.array([0.5])) == pytest.approx(2 / 3)

    def test_primal_prediction(self):
        est = fit_primal(Dataset(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([2.0, -2.0])), RIDGE, 1.0)
        np.testing.assert_allclose(est.coef, [1 / 1.5, -1 / 1.5])
        assert predict(est, np.array([2.0, 3.0])) == pytest.approx(-1 / 1.5)
        with pytest.raises(EstimatorError):
            predict(est, np.ones(3))

    def test_lambda_range(self):
        data = random_data(0, 10, 2)
        for bad in (0.05, 1.5):
            with pytest.raises(EstimatorError, match=r"\[1/n, 1\]"):
                fit(data, RIDGE, bad)
        fit(data, RIDGE, 0.1)

    def test_kappa_check(self):
        with pytest.raises(EstimatorError):
            Dataset(np.array([[2.0]]), np.array([1.0]), kappa2=1.0)
        assert Dataset(np.array([[1.0, 1.0]]), np.array([1.0])).kappa2 == 2.0

    def test_mode_selection(self):
        assert fit(random_data(1, 10, 3), RIDGE, 0.5).mode == "primal"
        assert fit(random_data(1, 3, 10), RIDGE, 0.5).mode == "dual"


class TestEquivalences:
    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("filt", [RIDGE, CUTOFF, FilterSpec.iterated_ridge(3), FilterSpec.gradient(0.5)],
                             ids=lambda f: f.name)
    def test_primal_dual_agree(self, seed, filt):
        rng = np.random.default_rng(seed)
        n, d = rng.integers(2, 21, size=2)
        data = random_data(seed, n, d)
        lam = float(rng.uniform(1.0 / n, 1.0))
        q = rng.standard_normal((7, d))
        p, du = fit_primal(data, filt, lam), fit_dual(data, filt, lam)
        np.testing.assert_allclose(predict(p, q), predict(du, q), atol=1e-8, rtol=0)
        np.testing.assert_allclose(p.coef, du.weights, atol=1e-8, rtol=0)

    @pytest.mark.parametrize("seed", range(10))
    def test_ridge_matches_linear_solve(self, seed):
        data = random_data(seed, 30, 8)
        lam = 0.05
        x, y, n = data.inputs, data.outputs, data.n
        direct = np.linalg.solve(x.T @ x / n + lam * np.eye(8), x.T @ y / n)
        np.testing.assert_allclose(fit_primal(data, RIDGE, lam).coef, direct, atol=1e-8, rtol=0)

    @pytest.mark.parametrize("t", [1, 2, 7, 33])
    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_filter_matches_landweber(self, t, seed):
        data = random_data(seed, 100, 6)
        eta = 1.0 / data.kappa2
        ref = gradient_descent_reference(data, eta, t)
        est = fit_primal(data, FilterSpec.gradient(eta), 1.0 / (eta * t))
        np.testing.assert_allclose(est.coef, ref.coef, atol=1e-8, rtol=0)

    def test_landweber_one_step(self):
        data = random_data(3, 10, 4)
        eta = 0.5 / data.kappa2
        ref = gradient_descent_reference(data, eta, 1)
        np.testing.assert_allclose(ref.coef, eta * data.inputs.T @ data.outputs / data.n)
        zero = Dataset(data.inputs, np.zeros(10))
        assert np.all(gradient_descent_reference(zero, eta, 5).coef == 0)
        with pytest.raises(EstimatorError):
            gradient_descent_reference(data, 2.0 / data.kappa2, 3)

    def test_kernel_ridge_matches_classical_form(self):
        rng = np.random.default_rng(4)
        pts = list(rng.standard_normal((12, 2)))
        y = rng.standard_normal(12)
        kern = gaussian_kernel(0.8)
        data = Dataset(pts, y, kernel=kern)
        lam = 0.1
        est = fit_dual(data, RIDGE, lam)
        k = gram_matrix(kern, pts).entries
        # (K/n + lam)^-1 y / n  ==  (K + n lam)^-1 y
        np.testing.assert_allclose(est.coef, np.linalg.solve(k + 12 * lam * np.eye(12), y), atol=1e-10)
        np.testing.assert_allclose(predict(est, pts), k @ est.coef, atol=1e-10)
        assert predict(est, pts[0]) == pytest.approx((k @ est.coef)[0])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3), which=st.integers(0, 3))
def test_linearity_in_outputs(seed, a, b, which):
    filt = [RIDGE, CUTOFF, FilterSpec.iterated_ridge(2), FilterSpec.gradient(0.5)][which]
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (15, 4)) / 2
    y1, y2 = rng.standard_normal(15), rng.standard_normal(15)
    w = lambda y: fit_primal(Dataset(x, y), filt, 0.2).coef
    np.testing.assert_allclose(w(a * y1 + b * y2), a * w(y1) + b * w(y2), atol=1e-10)


def test_ridge_norm_monotone_in_lambda():
    data = random_data(9, 40, 10)
    norms = [np.linalg.norm(fit_primal(data, RIDGE, lam).coef) for lam in np.geomspace(1 / 40, 1, 25)]
    assert np.all(np.diff(norms) <= 0)


def test_csv_roundtrip(tmp_path):
    data = random_data(2, 6, 3)
    path = tmp_path / "d.csv"
    write_csv(path, data.inputs, data.outputs)
    back = read_csv(path)
    assert np.array_equal(back.inputs, data.inputs)
    assert np.array_equal(back.outputs, data.outputs)
    path.write_text("1,2\n1,a\n")
    with pytest.raises(EstimatorError):
        read_csv(path)
