"""
Nonlinear elliptic benchmark on (0, 3)^2:

    Laplacian u = c u (d1 u + d2 u) + f  in the interior,  u = g on the boundary,

with the prescribed solution sin(pi x1) sin(pi x2) + 4 sin(4 pi x1) sin(4 pi x2)
and g = 0. The reduced variables are z = (z_bdy, z1, z2, z3) with
z1 = u, z2 = d1 u + d2 u, z3 = Laplacian u; the free vector is w = (z1, z2) and
z3 = c z1 z2 + f is eliminated.
"""

from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from sgpde.models.kernel import KernelSpec, KernelType
from sgpde.problems.base import (
    EliminationMap,
    FieldMap,
    ProblemSpec,
    identity_rows,
    instantiate,
    zero_rows,
)
from sgpde.solver.collocation import BOUNDARY, INTERIOR, Domain, OperatorSlot
from sgpde.solver.kernel_core import DiffOp

NAME = "elliptic"
DOMAIN = Domain(bounds=((0.0, 3.0), (0.0, 3.0)))
DEFAULT_SIGMA = 0.2
DEFAULT_RATIO = 0.75

LAYOUT = [
    OperatorSlot("dirac_boundary", DiffOp.identity(2), BOUNDARY),
    OperatorSlot("dirac", DiffOp.identity(2), INTERIOR),
    OperatorSlot("sum_d1", DiffOp.sum_d1(2), INTERIOR),
    OperatorSlot("laplacian", DiffOp.laplacian(2), INTERIOR),
]

PI = np.pi


def exact_solution(points: np.ndarray) -> np.ndarray:
    x1, x2 = points[:, 0], points[:, 1]
    return np.sin(PI * x1) * np.sin(PI * x2) + 4.0 * np.sin(4 * PI * x1) * np.sin(4 * PI * x2)


def exact_sum_d1(points: np.ndarray) -> np.ndarray:
    x1, x2 = points[:, 0], points[:, 1]
    d1 = PI * np.cos(PI * x1) * np.sin(PI * x2) + 16 * PI * np.cos(4 * PI * x1) * np.sin(4 * PI * x2)
    d2 = PI * np.sin(PI * x1) * np.cos(PI * x2) + 16 * PI * np.sin(4 * PI * x1) * np.cos(4 * PI * x2)
    return d1 + d2


def exact_laplacian(points: np.ndarray) -> np.ndarray:
    x1, x2 = points[:, 0], points[:, 1]
    return -2 * PI**2 * np.sin(PI * x1) * np.sin(PI * x2) - 128 * PI**2 * np.sin(
        4 * PI * x1
    ) * np.sin(4 * PI * x2)


def forcing(points: np.ndarray, coefficient: float = 1.0) -> np.ndarray:
    """f = Laplacian u* - c u* (d1 u* + d2 u*)."""
    return exact_laplacian(points) - coefficient * exact_solution(points) * exact_sum_d1(points)


def elliptic_problem(
    n: int,
    m: int,
    ratio: float = DEFAULT_RATIO,
    sigma: float = DEFAULT_SIGMA,
    seed: int = 0,
    coefficient: float = 1.0,
    kernel: Optional[KernelSpec] = None,
) -> Tuple[ProblemSpec, EliminationMap]:
    """
    Build the elliptic problem on N samples with M inducing points.

    Args:
        n: Number of collocation points
        m: Number of inducing points
        ratio: Interior fraction for both samples and inducing points
        sigma: Gaussian lengthscale (ignored when kernel is given)
        seed: Sampling seed
        coefficient: Nonlinearity coefficient c; 0 gives an affine problem
        kernel: Optional kernel override

    Returns:
        (ProblemSpec, EliminationMap)
    """
    kernel = kernel or KernelSpec(type=KernelType.GAUSSIAN_ISO, sigma=sigma, dim=2)
    samples, inducing, psi, phi = instantiate(DOMAIN, LAYOUT, n, m, ratio, seed)
    interior = samples.interior
    n_int = samples.n_interior
    n_bdy = samples.n_boundary
    g = np.zeros(n_bdy)
    f = forcing(interior, coefficient)
    free_dim = 2 * n_int

    def z_of_w(w: np.ndarray) -> np.ndarray:
        w1, w2 = w[:n_int], w[n_int:]
        return np.concatenate([g, w1, w2, coefficient * w1 * w2 + f])

    def jacobian(w: np.ndarray) -> sparse.csr_matrix:
        w1, w2 = w[:n_int], w[n_int:]
        nonlinear = sparse.hstack(
            [sparse.diags(coefficient * w2), sparse.diags(coefficient * w1)], format="csr"
        )
        return sparse.vstack(
            [
                zero_rows(n_bdy, free_dim),
                identity_rows(n_int, free_dim, 0),
                identity_rows(n_int, free_dim, n_int),
                nonlinear,
            ],
            format="csr",
        )

    def constraint_residual(z: np.ndarray) -> float:
        z_bdy = z[:n_bdy]
        z1 = z[n_bdy:n_bdy + n_int]
        z2 = z[n_bdy + n_int:n_bdy + 2 * n_int]
        z3 = z[n_bdy + 2 * n_int:]
        parts = [np.abs(z_bdy - g), np.abs(z3 - coefficient * z1 * z2 - f)]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    spec = ProblemSpec(
        name=NAME,
        domain=DOMAIN,
        params={"coefficient": coefficient},
        kernel=kernel,
        layout_psi=LAYOUT,
        layout_phi=LAYOUT,
        samples=samples,
        inducing=inducing,
        psi=psi,
        phi=phi,
        constraint_residual=constraint_residual,
        reference=exact_solution,
    )
    elimination = EliminationMap(
        free_dim=free_dim,
        fields=(FieldMap("u", 1.0, z_of_w, jacobian),),
    )
    return spec, elimination


def exact_reduced(spec: ProblemSpec) -> np.ndarray:
    """Reduced variables of the prescribed solution at the problem's samples."""
    interior = spec.samples.interior
    return np.concatenate(
        [
            exact_solution(spec.samples.boundary) if spec.samples.n_boundary else np.zeros(0),
            exact_solution(interior),
            exact_sum_d1(interior),
            exact_laplacian(interior),
        ]
    )
