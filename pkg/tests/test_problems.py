"""
Tests for the benchmark problems: data, eliminations and Jacobians.
"""

import numpy as np
import pytest

from sgpde.errors import InvalidArgumentError
from sgpde.models.config import parse_run_config
from sgpde.problems import build_problem, burgers_problem, elliptic_problem, mfg_problem, parabolic_problem
from sgpde.problems import elliptic, parabolic
from sgpde.problems.burgers import boundary_data
from sgpde.problems.mfg import potential


def _fd_jacobian(func, w, h=1e-6):
    columns = []
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = h
        columns.append((func(w + e) - func(w - e)) / (2 * h))
    return np.stack(columns, axis=1)


def _assert_jacobian(func, jac, w):
    expected = _fd_jacobian(func, w)
    actual = jac(w).toarray()
    scale = max(1.0, np.abs(expected).max())
    np.testing.assert_allclose(actual, expected, rtol=1e-6, atol=1e-6 * scale)


def test_elliptic_zero_free_vector():
    """Test w = 0 gives z = (0, 0, 0, f)."""
    spec, elim = elliptic_problem(16, 8)
    z = elim.z_of_w(np.zeros(elim.free_dim))
    n_bdy, n_int = spec.samples.n_boundary, spec.samples.n_interior
    np.testing.assert_array_equal(z[: n_bdy + 2 * n_int], 0.0)
    np.testing.assert_allclose(z[n_bdy + 2 * n_int:], elliptic.forcing(spec.samples.interior))


def test_elliptic_prescribed_solution():
    """Test the prescribed solution at the domain centre."""
    value = elliptic.exact_solution(np.array([[1.5, 1.5]]))[0]
    assert value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("coefficient", [0.0, 1.0, 2.5])
def test_elliptic_jacobian(coefficient):
    """Test the elliptic Jacobian against finite differences."""
    _, elim = elliptic_problem(16, 8, coefficient=coefficient)
    w = np.random.default_rng(0).standard_normal(elim.free_dim)
    _assert_jacobian(elim.z_of_w, elim.jacobian, w)


@pytest.mark.parametrize("coefficient", [0.0, 1.0])
def test_elliptic_forcing_is_consistent(coefficient):
    """Test the prescribed solution satisfies the discrete constraints."""
    spec, _ = elliptic_problem(40, 20, coefficient=coefficient)
    assert spec.constraint_residual(elliptic.exact_reduced(spec)) < 1e-9


def test_burgers_boundary_data():
    """Test homogeneous side data and the sine initial condition."""
    points = np.array([[0.3, 1.0], [0.7, -1.0], [0.0, 0.5]])
    np.testing.assert_allclose(boundary_data(points), [0.0, 0.0, -1.0], atol=1e-15)


def test_burgers_linear_part():
    """Test u = 0 makes u_t = nu u_xx."""
    spec, elim = burgers_problem(24, 12, nu=0.02)
    n_int, n_bdy = spec.samples.n_interior, spec.samples.n_boundary
    w = np.random.default_rng(1).standard_normal(elim.free_dim)
    w[:n_int] = 0.0
    z = elim.z_of_w(w)
    np.testing.assert_allclose(z[n_bdy + 3 * n_int:], 0.02 * w[2 * n_int:])


def test_burgers_jacobian():
    """Test the Burgers Jacobian against finite differences."""
    _, elim = burgers_problem(24, 12)
    w = np.random.default_rng(2).standard_normal(elim.free_dim)
    _assert_jacobian(elim.z_of_w, elim.jacobian, w)


def test_burgers_rejects_non_positive_viscosity():
    """Test nu must be positive."""
    with pytest.raises(InvalidArgumentError):
        burgers_problem(24, 12, nu=0.0)


def test_burgers_reference_matches_initial_condition():
    """Test the Cole-Hopf reference at t = 0."""
    spec, _ = burgers_problem(24, 12)
    points = np.array([[0.0, 0.5], [0.0, -0.25]])
    np.testing.assert_allclose(spec.reference(points), -np.sin(np.pi * points[:, 1]))


def test_parabolic_prescribed_solution():
    """Test the prescribed solution at t = 0 and at (1, 0.75)."""
    x = np.linspace(0.0, 1.5, 7)
    initial = parabolic.exact_solution(np.stack([np.zeros_like(x), x], axis=1))
    np.testing.assert_allclose(initial, np.sin(np.pi * x) + 2 * np.cos(2 * np.pi * x))
    value = parabolic.exact_solution(np.array([[1.0, 0.75]]))[0]
    assert value == pytest.approx(np.sin(0.75 * np.pi) / np.e, abs=1e-12)


def test_parabolic_jacobian_and_forcing():
    """Test the parabolic Jacobian and the forcing consistency."""
    spec, elim = parabolic_problem(28, 14)
    w = np.random.default_rng(3).standard_normal(elim.free_dim)
    _assert_jacobian(elim.z_of_w, elim.jacobian, w)
    assert spec.constraint_residual(parabolic.exact_reduced(spec)) < 1e-9


def test_mfg_substitution():
    """Test z = 0, rho1 = 1, lambda = 0 gives HJB = 1 - V and FP = 0."""
    spec, elim = mfg_problem(10, 5)
    model = spec.extras["model"]
    w = np.zeros(elim.free_dim)
    rho = model.rho_of_w(w)
    np.testing.assert_allclose(rho[: model.n], 1.0)
    residual = elim.residual(w)
    np.testing.assert_allclose(residual[: model.n], 1.0 - potential(spec.samples.interior))
    np.testing.assert_allclose(residual[model.n:], 0.0, atol=1e-15)


def test_mfg_zero_free_vector_is_uniform_density():
    """Test w = 0 gives m = 1 at every sample, u = 0 and lambda = 0."""
    spec, elim = mfg_problem(12, 6)
    model = spec.extras["model"]
    z, rho, lam = model.split(np.zeros(elim.free_dim))
    np.testing.assert_array_equal(rho[: model.n], 1.0)
    np.testing.assert_array_equal(rho[model.n:], 0.0)
    np.testing.assert_array_equal(z, 0.0)
    assert lam == 0.0


def test_mfg_mean_constraints_hold_exactly():
    """Test reconstructed rho1 has mean 1 and z1 has mean 0 for random free vectors."""
    spec, elim = mfg_problem(12, 6)
    model = spec.extras["model"]
    rng = np.random.default_rng(4)
    for _ in range(5):
        w = rng.standard_normal(elim.free_dim)
        z, rho, _ = model.split(w)
        assert rho[: model.n].mean() == pytest.approx(1.0, abs=1e-12)
        assert z[: model.n].sum() == pytest.approx(0.0, abs=1e-12)
        assert spec.constraint_residual(elim.z_of_w(w)) < 1e-12


def test_mfg_jacobians():
    """Test the field and residual Jacobians against finite differences."""
    _, elim = mfg_problem(8, 4)
    w = np.random.default_rng(5).standard_normal(elim.free_dim)
    _assert_jacobian(elim.z_of_w, elim.jacobian, w)
    _assert_jacobian(elim.residual, elim.residual_jacobian, w)


def test_mfg_free_dimension_and_penalty():
    """Test the free vector length and the lambda penalty."""
    spec, elim = mfg_problem(10, 5, gamma=1e-8)
    assert elim.free_dim == 8 * 10 - 1
    assert elim.penalty[-1] == 1e-8
    assert np.all(elim.penalty[:-1] == 0.0)
    assert [f.label for f in elim.fields] == ["u", "m"]
    assert spec.primary_field == "m"


def test_build_problem_from_config():
    """Test the config factory applies overrides."""
    config = parse_run_config({"problem": "elliptic", "N": 40, "M": 20, "seed": 2})
    spec, elim = build_problem(config, n=24, m=12)
    assert spec.n == 24 and spec.m == 12
    assert spec.samples.seed == 2
    assert elim.free_dim == 2 * spec.samples.n_interior
