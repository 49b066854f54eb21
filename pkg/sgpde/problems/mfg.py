"""
Stationary mean-field game on the torus [-0.5, 0.5]^2:

    -nu Laplacian u + |grad u|^2 / 2 + V = m^2 + lambda,
    -nu Laplacian m - div(m grad u) = 0,
    mean(m) = 1, mean(u) = 0.

Both unknowns use the layout [Dirac, D1, D2, Laplacian] at all N samples,
giving z (for u) and rho (for m). The two mean constraints are eliminated
exactly through the last Dirac entry of each; the PDE residuals are soft and
enter the objective as squares next to gamma |u|^2 + gamma |m|^2 + gamma lambda^2.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from sgpde.errors import InvalidArgumentError
from sgpde.models.kernel import KernelSpec, KernelType
from sgpde.problems.base import EliminationMap, FieldMap, ProblemSpec, instantiate
from sgpde.solver.collocation import ALL, Domain, OperatorSlot
from sgpde.solver.kernel_core import DiffOp

NAME = "mfg"
DOMAIN = Domain(bounds=((-0.5, 0.5), (-0.5, 0.5)), periodic_axes=frozenset({0, 1}))
DEFAULT_NU = 0.1
DEFAULT_GAMMA = 1e-10

LAYOUT = [
    OperatorSlot("dirac", DiffOp.identity(2), ALL),
    OperatorSlot("d1", DiffOp.partial(0, 1, 2, "D1"), ALL),
    OperatorSlot("d2", DiffOp.partial(1, 1, 2, "D2"), ALL),
    OperatorSlot("laplacian", DiffOp.laplacian(2), ALL),
]


def potential(points: np.ndarray) -> np.ndarray:
    """V(x) = (sin 4 pi x1 + cos 4 pi x1 + sin 4 pi x2) / 2."""
    x1, x2 = points[:, 0], points[:, 1]
    return 0.5 * (np.sin(4 * np.pi * x1) + np.cos(4 * np.pi * x1) + np.sin(4 * np.pi * x2))


@dataclass(frozen=True)
class MfgModel:
    """
    Block structure of the MFG unknowns.

    The free vector is w = (z without z1_N, rho without rho1_N, lambda). The
    Dirac entries are stored as offsets from their mean, z1_j = w_j and
    rho1_j = 1 + w_j for j < N, with z1_N = -sum w_j and rho1_N = 1 - sum w_j,
    so w = 0 is the uniform density m = 1 with u = 0.
    """
    n: int
    nu: float
    potential_values: np.ndarray

    @property
    def field_dim(self) -> int:
        return 4 * self.n

    @property
    def free_dim(self) -> int:
        return 2 * (self.field_dim - 1) + 1

    def _expand(self, free: np.ndarray, mean: float) -> np.ndarray:
        offsets = free[: self.n - 1]
        return np.concatenate([mean + offsets, [mean - offsets.sum()], free[self.n - 1:]])

    def _expansion_jacobian(self, offset: int) -> sparse.csr_matrix:
        """Constant Jacobian of one field's reduced variables w.r.t. w."""
        n, size = self.n, self.field_dim
        rows = []
        cols = []
        vals = []
        for j in range(n - 1):
            rows.append(j)
            cols.append(offset + j)
            vals.append(1.0)
            rows.append(n - 1)
            cols.append(offset + j)
            vals.append(-1.0)
        for j in range(n, size):
            rows.append(j)
            cols.append(offset + j - 1)
            vals.append(1.0)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(size, self.free_dim))

    def split(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """(z, rho, lambda) for a free vector."""
        k = self.field_dim - 1
        z = self._expand(w[:k], 0.0)
        rho = self._expand(w[k:2 * k], 1.0)
        return z, rho, float(w[-1])

    def z_of_w(self, w: np.ndarray) -> np.ndarray:
        return self.split(w)[0]

    def rho_of_w(self, w: np.ndarray) -> np.ndarray:
        return self.split(w)[1]

    def z_jacobian(self, w: np.ndarray) -> sparse.csr_matrix:
        return self._expansion_jacobian(0)

    def rho_jacobian(self, w: np.ndarray) -> sparse.csr_matrix:
        return self._expansion_jacobian(self.field_dim - 1)

    def residuals(self, w: np.ndarray) -> np.ndarray:
        """Stacked (HJB, FP) residuals at the N samples."""
        z, rho, lam = self.split(w)
        _, z2, z3, z4 = np.split(z, 4)
        r1, r2, r3, r4 = np.split(rho, 4)
        hjb = self.nu * z4 - 0.5 * (z2 * z2 + z3 * z3) - self.potential_values + r1 * r1 + lam
        fp = -self.nu * r4 - r2 * z2 - r3 * z3 - r1 * z4
        return np.concatenate([hjb, fp])

    def residual_jacobian(self, w: np.ndarray) -> sparse.csr_matrix:
        z, rho, _ = self.split(w)
        _, z2, z3, z4 = np.split(z, 4)
        r1, r2, r3, _ = np.split(rho, 4)
        n = self.n
        zero = sparse.csr_matrix((n, n))
        d_hjb_dz = sparse.hstack(
            [zero, sparse.diags(-z2), sparse.diags(-z3), self.nu * sparse.eye(n)]
        )
        d_hjb_drho = sparse.hstack([sparse.diags(2.0 * r1), zero, zero, zero])
        d_fp_dz = sparse.hstack([zero, sparse.diags(-r2), sparse.diags(-r3), sparse.diags(-r1)])
        d_fp_drho = sparse.hstack(
            [sparse.diags(-z4), sparse.diags(-z2), sparse.diags(-z3), -self.nu * sparse.eye(n)]
        )
        d_z = sparse.vstack([d_hjb_dz, d_fp_dz])
        d_rho = sparse.vstack([d_hjb_drho, d_fp_drho])
        d_lam = sparse.csr_matrix(
            (np.ones(n), (np.arange(n), np.full(n, self.free_dim - 1))),
            shape=(2 * n, self.free_dim),
        )
        return sparse.csr_matrix(d_z @ self.z_jacobian(w) + d_rho @ self.rho_jacobian(w) + d_lam)

    def constraint_residual(self, reduced: np.ndarray) -> float:
        """Mean-constraint violation for concatenated (z, rho)."""
        z, rho = reduced[: self.field_dim], reduced[self.field_dim:]
        return float(
            max(abs(z[: self.n].sum()), abs(rho[: self.n].mean() - 1.0))
        )


def mfg_problem(
    n: int,
    m: int,
    nu: float = DEFAULT_NU,
    seed: int = 0,
    gamma: float = DEFAULT_GAMMA,
    lengthscale: float = 1.0,
    kernel: Optional[KernelSpec] = None,
) -> Tuple[ProblemSpec, EliminationMap]:
    """
    Build the MFG system on N torus samples with M inducing points.

    Args:
        n: Number of collocation points (all interior)
        m: Number of inducing points
        nu: Viscosity (> 0)
        seed: Sampling seed
        gamma: Weight of the three quadratic regularizers
        lengthscale: Periodic-kernel lengthscale (1 is the standard torus kernel)
        kernel: Optional kernel override

    Returns:
        (ProblemSpec, EliminationMap); the MfgModel is in spec.extras["model"]
    """
    if not nu > 0.0:
        raise InvalidArgumentError(f"viscosity must be positive, got {nu}")
    kernel = kernel or KernelSpec(
        type=KernelType.PERIODIC_EXP, sigma=lengthscale, dim=2, period=1.0
    )
    samples, inducing, psi, phi = instantiate(DOMAIN, LAYOUT, n, m, 1.0, seed)
    model = MfgModel(n=n, nu=nu, potential_values=potential(samples.interior))

    penalty = np.zeros(model.free_dim)
    penalty[-1] = gamma

    spec = ProblemSpec(
        name=NAME,
        domain=DOMAIN,
        params={"nu": nu, "gamma": gamma},
        kernel=kernel,
        layout_psi=LAYOUT,
        layout_phi=LAYOUT,
        samples=samples,
        inducing=inducing,
        psi=psi,
        phi=phi,
        constraint_residual=model.constraint_residual,
        fields=("u", "m"),
        primary_field="m",
        extras={"model": model},
    )
    elimination = EliminationMap(
        free_dim=model.free_dim,
        fields=(
            FieldMap("u", gamma, model.z_of_w, model.z_jacobian),
            FieldMap("m", gamma, model.rho_of_w, model.rho_jacobian),
        ),
        residual=model.residuals,
        residual_jacobian=model.residual_jacobian,
        penalty=penalty,
    )
    return spec, elimination
