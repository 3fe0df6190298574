import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from specreg.spectral_core import (
    EigenSystem,
    SpectralError,
    SymMatrix,
    apply_spectral,
    gaussian_kernel,
    gram_matrix,
    linear_kernel,
    sym_eigendecompose,
)


def random_psd(seed, n=10):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n))
    return b @ b.T / n


def test_identity():
    eig = sym_eigendecompose(np.eye(3))
    np.testing.assert_allclose(eig.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(eig.eigenvectors.T @ eig.eigenvectors, np.eye(3), atol=1e-12)


def test_diagonal():
    eig = sym_eigendecompose(np.diag([4.0, 1.0]))
    np.testing.assert_allclose(eig.eigenvalues, [4, 1])
    np.testing.assert_allclose(np.abs(eig.eigenvectors), np.eye(2))


def test_two_by_two_hand_solution():
    # det([[2-s, 1], [1, 2-s]]) = (2-s)^2 - 1 = 0  =>  s = 3, 1
    eig = sym_eigendecompose(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(eig.eigenvalues, [3, 1], atol=1e-14)
    v = eig.eigenvectors * np.sign(eig.eigenvectors[0])
    np.testing.assert_allclose(v[:, 0], np.array([1, 1]) / np.sqrt(2), atol=1e-14)
    np.testing.assert_allclose(v[:, 1], np.array([1, -1]) / np.sqrt(2), atol=1e-14)


def test_rejects_non_finite_and_asymmetric():
    with pytest.raises(SpectralError):
        sym_eigendecompose(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(SpectralError):
        SymMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(SpectralError):
        SymMatrix(np.array([[1.0, 0.0], [0.0, -1.0]]), psd=True)


def test_deterministic():
    a = random_psd(3, 30)
    e1, e2 = sym_eigendecompose(a), sym_eigendecompose(a)
    assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
    assert np.array_equal(e1.eigenvectors, e2.eigenvectors)


def test_apply_spectral_examples():
    eig = sym_eigendecompose(np.diag([4.0, 1.0]))
    out = apply_spectral(eig, lambda u: 1.0 / (u + 1.0), np.array([1.0, 1.0]))
    np.testing.assert_allclose(out, [0.2, 0.5], atol=1e-15)
    v = np.array([0.3, -2.0])
    np.testing.assert_allclose(apply_spectral(eig, lambda u: np.ones_like(u), v), v)
    with pytest.raises(SpectralError):
        apply_spectral(eig, lambda u: u, np.ones(3))


def test_negative_roundoff_is_clamped():
    eig = EigenSystem(np.array([1.0, -1e-15]), np.eye(2))
    out = apply_spectral(eig, lambda u: np.where(u >= 0.5, 1.0 / np.where(u > 0, u, 1.0), 0.0), np.ones(2))
    np.testing.assert_allclose(out, [1.0, 0.0])
    with pytest.raises(SpectralError), np.errstate(divide="ignore"):
        apply_spectral(eig, lambda u: 1.0 / u, np.ones(2))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), v=hnp.arrays(float, 10, elements=st.floats(-10, 10)))
def test_eigensystem_invariants(seed, v):
    a = random_psd(seed)
    eig = sym_eigendecompose(a)
    assert np.all(np.diff(eig.eigenvalues) <= 0)
    np.testing.assert_array_less(np.abs(eig.eigenvectors.T @ eig.eigenvectors - np.eye(10)), 1e-8)
    assert np.max(np.abs(eig.reconstruct() - a)) <= 1e-8 * np.linalg.norm(a)
    av = a @ v
    np.testing.assert_allclose(apply_spectral(eig, lambda u: u, v), av, rtol=1e-8, atol=1e-8 * np.abs(av).max())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(1e-3, 10))
def test_commuting_functions_compose(seed, lam):
    eig = sym_eigendecompose(random_psd(seed))
    v = np.random.default_rng(seed).standard_normal(10)
    f = lambda u: 1.0 / (u + lam)
    g = lambda u: u**2 + 1.0
    fg = apply_spectral(eig, f, apply_spectral(eig, g, v))
    gf = apply_spectral(eig, g, apply_spectral(eig, f, v))
    direct = apply_spectral(eig, lambda u: f(u) * g(u), v)
    np.testing.assert_allclose(fg, direct, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(gf, direct, rtol=1e-8, atol=1e-10)


def test_gram_examples():
    np.testing.assert_array_equal(gram_matrix(linear_kernel, np.eye(2)).entries, np.eye(2))
    k = gram_matrix(linear_kernel, np.array([[1.0, 0.0], [1.0, 1.0]])).entries
    np.testing.assert_array_equal(k, [[1, 1], [1, 2]])
    pts = list(np.random.default_rng(0).standard_normal((6, 3)))
    kg = gram_matrix(gaussian_kernel(0.7), pts).entries
    np.testing.assert_array_equal(np.diag(kg), np.ones(6))
    assert np.array_equal(kg, kg.T)


def test_gram_rejects_non_finite_kernel():
    with pytest.raises(SpectralError):
        gram_matrix(lambda x, z: np.inf, [np.zeros(1), np.ones(1)])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), bw=st.floats(0.1, 5))
def test_gram_eigenvalues_nonnegative(seed, bw):
    pts = np.random.default_rng(seed).standard_normal((15, 2))
    for kern, p in ((gaussian_kernel(bw), list(pts)), (linear_kernel, pts)):
        s = sym_eigendecompose(gram_matrix(kern, p)).eigenvalues
        assert s[-1] >= -1e-10 * s[0]
