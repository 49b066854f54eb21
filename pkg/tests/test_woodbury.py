"""
Tests for the low-rank and dense covariance inverses against spectral oracles.
"""

import math

import numpy as np
import pytest
from scipy import sparse

from sgpde.errors import InvalidArgumentError
from sgpde.solver.gram_assembly import CholeskyFactor
from sgpde.solver.woodbury import DenseInverse, LowRankInverse


class SpectralOracle:
    """
    Sigma = gamma I + C^T C from the full SVD of C = L^-1 B.

    Sigma^-1 v is a rotation, a diagonal scaling and a rotation back, so no
    digits are lost to cancellation however small gamma is.
    """

    def __init__(self, c, gamma):
        _, s, vt = np.linalg.svd(c, full_matrices=True)
        eigenvalues = np.full(c.shape[1], gamma)
        eigenvalues[: len(s)] += s**2
        self.vt = vt
        self.eigenvalues = eigenvalues

    def solve(self, v):
        scaled = (self.vt @ v) / (self.eigenvalues if v.ndim == 1 else self.eigenvalues[:, None])
        return self.vt.T @ scaled

    def quad(self, v):
        rotated = self.vt @ v
        return float(np.sum(rotated**2 / self.eigenvalues))

    def gram(self, jac):
        rotated = (self.vt @ jac) / np.sqrt(self.eigenvalues)[:, None]
        return rotated.T @ rotated

    def log_det(self):
        return float(np.sum(np.log(self.eigenvalues)))


def _random_instance(rng, r, r_bar, gamma):
    """Random SPD theta (R x R), cross (R x R_bar) and the oracle for Sigma."""
    g = rng.standard_normal((r, r))
    theta = g @ g.T + r * np.eye(r)
    cross = rng.standard_normal((r, r_bar))
    lower = np.linalg.cholesky(theta)
    lri = LowRankInverse.factorize(CholeskyFactor(lower=lower, eta_used=0.0), cross, gamma)
    oracle = SpectralOracle(np.linalg.solve(lower, cross), gamma)
    return lri, oracle, theta, cross


def _identity_instance(n, gamma):
    return LowRankInverse.factorize(CholeskyFactor(lower=np.eye(n), eta_used=0.0), np.eye(n), gamma)


def test_zero_cross():
    """Test B = 0 gives a zero coupling and T^T T = gamma I."""
    lri = LowRankInverse.factorize(CholeskyFactor(np.eye(3), 0.0), np.zeros((3, 4)), 0.5)
    np.testing.assert_array_equal(lri.coupling, np.zeros((3, 3)))
    np.testing.assert_allclose(lri.inner_factor.T @ lri.inner_factor, 0.5 * np.eye(3))
    v = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_allclose(lri.apply_inverse(v), v / 0.5)
    assert lri.quad_form(v) == pytest.approx(v @ v / 0.5)
    assert lri.log_det() == pytest.approx(4 * math.log(0.5))
    psi_diag = np.array([1.0, 2.0, 3.0, 4.0])
    assert lri.trace_correction(psi_diag) == pytest.approx(10.0)


def test_identity_theta_and_cross():
    """Test gamma = 1, Theta = B = I gives Sigma = 2 I."""
    lri = _identity_instance(3, 1.0)
    v = np.array([2.0, 4.0, -6.0])
    np.testing.assert_allclose(lri.apply_inverse(v), v / 2.0)
    assert lri.log_det() == pytest.approx(3 * math.log(2.0))


def test_zero_vector():
    """Test the inverse of zero is zero."""
    lri, _, _, _ = _random_instance(np.random.default_rng(0), 3, 5, 1e-2)
    np.testing.assert_array_equal(lri.apply_inverse(np.zeros(5)), np.zeros(5))
    assert lri.quad_form(np.zeros(5)) == 0.0


def test_factors_reconstruct():
    """Test U has orthonormal columns, U R_c = (L^-1 B)^T and T^T T = U^T Sigma U."""
    rng = np.random.default_rng(1)
    lri, _, theta, cross = _random_instance(rng, 4, 9, 1e-2)
    c = np.linalg.solve(np.linalg.cholesky(theta), cross)
    np.testing.assert_allclose(lri.basis.T @ lri.basis, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(lri.basis @ lri.coupling, c.T, rtol=1e-10, atol=1e-12)
    sigma = 1e-2 * np.eye(9) + c.T @ c
    np.testing.assert_allclose(
        lri.inner_factor.T @ lri.inner_factor, lri.basis.T @ sigma @ lri.basis, rtol=1e-10
    )
    assert np.all(np.diag(lri.inner_factor) > 0.0)


def test_more_inducing_than_sample_functionals():
    """Test R > R_bar keeps a square basis and the exact inverse."""
    rng = np.random.default_rng(2)
    lri, oracle, _, _ = _random_instance(rng, 7, 4, 1e-2)
    assert lri.basis.shape == (4, 4)
    v = rng.standard_normal(4)
    np.testing.assert_allclose(lri.apply_inverse(v), oracle.solve(v), rtol=1e-10)
    assert lri.log_det() == pytest.approx(oracle.log_det(), rel=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_random_instances_against_dense(seed):
    """Test apply_inverse, quad_form and log_det against the spectral oracle."""
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, 51))
    r_bar = int(rng.integers(r, 201))
    gamma = 1e-2 if seed % 2 else 1e-6
    lri, oracle, _, _ = _random_instance(rng, r, r_bar, gamma)

    v = rng.standard_normal(r_bar)
    expected = oracle.solve(v)
    error = np.linalg.norm(lri.apply_inverse(v) - expected)
    assert error <= 1e-8 * np.linalg.norm(expected)
    assert lri.quad_form(v) == pytest.approx(oracle.quad(v), rel=1e-8)
    assert lri.log_det() == pytest.approx(oracle.log_det(), rel=1e-8, abs=1e-8)


def test_apply_inverse_on_matrix_and_sparse():
    """Test dense and sparse matrix operands give the same columns."""
    rng = np.random.default_rng(4)
    lri, oracle, _, _ = _random_instance(rng, 5, 12, 1e-2)
    mat = rng.standard_normal((12, 3))
    expected = oracle.solve(mat)
    np.testing.assert_allclose(lri.apply_inverse(mat), expected, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(
        lri.apply_inverse(sparse.csr_matrix(mat)), expected, rtol=1e-8, atol=1e-10
    )


def test_weighted_gram_matches_dense():
    """Test J^T Sigma^-1 J for a sparse Jacobian."""
    rng = np.random.default_rng(6)
    lri, oracle, _, _ = _random_instance(rng, 6, 15, 1e-2)
    jac = sparse.random(15, 7, density=0.4, random_state=3, format="csr")
    expected = oracle.gram(jac.toarray())
    np.testing.assert_allclose(lri.weighted_gram(jac), expected, rtol=1e-8, atol=1e-10)


def test_whiten_reproduces_quadratic_form():
    """Test |W v|^2 = v^T Sigma^-1 v and (W a) . (W b) = a^T Sigma^-1 b."""
    rng = np.random.default_rng(7)
    lri, oracle, _, _ = _random_instance(rng, 5, 20, 1e-6)
    a, b = rng.standard_normal(20), rng.standard_normal(20)
    assert lri.whiten(a).shape == (5 + 20,)
    assert float(lri.whiten(a) @ lri.whiten(a)) == pytest.approx(oracle.quad(a), rel=1e-8)
    assert float(lri.whiten(a) @ lri.whiten(b)) == pytest.approx(
        float(a @ oracle.solve(b)), rel=1e-7, abs=1e-8 * oracle.quad(a)
    )


def test_inducing_weights_match_cross_product():
    """Test L^-1 B Sigma^-1 z against the oracle."""
    rng = np.random.default_rng(9)
    lri, oracle, theta, cross = _random_instance(rng, 6, 25, 1e-2)
    z = rng.standard_normal(25)
    c = np.linalg.solve(np.linalg.cholesky(theta), cross)
    np.testing.assert_allclose(lri.inducing_weights(z), c @ oracle.solve(z), rtol=1e-8, atol=1e-10)


def test_extreme_scale_factorizes_without_cancellation():
    """Test gamma = 1e-12 with |L^-1 B| ~ 1e3, where I + A A^T has condition ~1e18."""
    rng = np.random.default_rng(11)
    cross = 100.0 * rng.standard_normal((20, 60))
    lri = LowRankInverse.factorize(CholeskyFactor(np.eye(20), 1e-12), cross, 1e-12)
    oracle = SpectralOracle(cross, 1e-12)

    assert np.all(np.isfinite(lri.inner_factor))
    assert lri.log_det() == pytest.approx(oracle.log_det(), rel=1e-10)

    jac = rng.standard_normal((60, 8))
    gram = lri.weighted_gram(jac)
    expected = oracle.gram(jac)
    np.testing.assert_allclose(gram, gram.T, rtol=0.0, atol=1e-12 * np.abs(gram).max())
    np.testing.assert_allclose(gram, expected, rtol=1e-8, atol=1e-8 * np.abs(expected).max())
    assert np.linalg.eigvalsh(gram).min() > 0.0

    # B annihilates the gamma^-1 complement, so the representer weights stay O(1)
    y = rng.standard_normal(20)
    np.testing.assert_allclose(lri.inducing_weights(cross.T @ y), y, rtol=1e-8, atol=1e-8)


def test_extreme_scale_quadratic_form_is_consistent():
    """Test quad_form and whiten agree with the oracle at gamma = 1e-12."""
    rng = np.random.default_rng(12)
    cross = 100.0 * rng.standard_normal((15, 40))
    lri = LowRankInverse.factorize(CholeskyFactor(np.eye(15), 1e-12), cross, 1e-12)
    oracle = SpectralOracle(cross, 1e-12)
    z = rng.standard_normal(40)
    assert lri.quad_form(z) == pytest.approx(oracle.quad(z), rel=1e-8)
    assert lri.quad_form(z) > 0.0


def test_trace_correction_against_dense():
    """Test Tr(K) - Tr(Q) for a random subset instance."""
    rng = np.random.default_rng(8)
    points = rng.uniform(0, 1, (30, 1))
    k = np.exp(-0.5 * (points - points.T) ** 2 / 0.3**2)
    subset = np.sort(rng.choice(30, 10, replace=False))
    theta = k[np.ix_(subset, subset)] + 1e-10 * np.eye(10)
    cross = k[subset]
    lri = LowRankInverse.factorize(CholeskyFactor(np.linalg.cholesky(theta), 1e-10), cross, 1e-3)
    q = cross.T @ np.linalg.solve(theta, cross)
    expected = np.trace(k) - np.trace(q)
    assert lri.trace_correction(np.diag(k)) == pytest.approx(expected, rel=1e-6, abs=1e-8)


def test_q_matvec_against_dense():
    """Test Q v = B^T Theta^-1 B v."""
    rng = np.random.default_rng(13)
    lri, _, theta, cross = _random_instance(rng, 6, 18, 1e-2)
    v = rng.standard_normal(18)
    expected = cross.T @ np.linalg.solve(theta, cross @ v)
    np.testing.assert_allclose(lri.q_matvec(v), expected, rtol=1e-9, atol=1e-12)


def test_exact_interpolation_has_no_trace_gap():
    """Test phi = psi with no nugget makes the trace correction vanish."""
    points = np.linspace(0, 1, 6)[:, None]
    k = np.exp(-0.5 * (points - points.T) ** 2 / 0.3**2)
    lri = LowRankInverse.factorize(CholeskyFactor(np.linalg.cholesky(k), 0.0), k, 1e-4)
    assert abs(lri.trace_correction(np.diag(k))) <= 1e-8 * np.trace(k)


def test_non_positive_gamma_is_rejected():
    """Test gamma must be positive."""
    with pytest.raises(InvalidArgumentError):
        _identity_instance(2, 0.0)
    with pytest.raises(InvalidArgumentError):
        DenseInverse.factorize(np.eye(2), -1.0)


def test_wrong_operand_length_is_rejected():
    """Test operands must have R_bar rows."""
    lri = _identity_instance(3, 1.0)
    with pytest.raises(InvalidArgumentError):
        lri.apply_inverse(np.ones(4))
    with pytest.raises(InvalidArgumentError):
        lri.whiten(np.ones(2))


def test_dense_inverse_matches_low_rank_limit():
    """Test the dense inverse agrees with the low-rank one when Q = K."""
    rng = np.random.default_rng(10)
    lri, oracle, theta, cross = _random_instance(rng, 8, 8, 1e-2)
    k = cross.T @ np.linalg.solve(theta, cross)
    dense = DenseInverse.factorize(k, 1e-2)
    v = rng.standard_normal(8)
    np.testing.assert_allclose(dense.apply_inverse(v), oracle.solve(v), rtol=1e-7, atol=1e-8)
    assert dense.quad_form(v) == pytest.approx(lri.quad_form(v), rel=1e-7)
    assert dense.log_det() == pytest.approx(lri.log_det(), rel=1e-8, abs=1e-8)
    assert dense.trace_correction(np.diag(k)) == 0.0
    np.testing.assert_allclose(
        dense.weighted_gram(np.eye(8)), np.linalg.inv(k + 1e-2 * np.eye(8)), rtol=1e-6, atol=1e-8
    )
