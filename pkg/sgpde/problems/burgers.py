"""
Viscous Burgers benchmark on (t, x) in (0, 1] x (-1, 1):

    u_t + u u_x - nu u_xx = 0,  u(0, x) = -sin(pi x),  u(t, +-1) = 0.

Reduced variables: (boundary data, u, u_x, u_xx, u_t) with u_t = nu u_xx - u u_x
eliminated. The reference solution comes from the Cole-Hopf quadrature.
"""

from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from sgpde.diagnostics.reference import cole_hopf_burgers
from sgpde.errors import InvalidArgumentError
from sgpde.models.config import TIME_SPACE_SIGMA
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

NAME = "burgers"
DOMAIN = Domain(bounds=((0.0, 1.0), (-1.0, 1.0)), time_axis=0)
DEFAULT_SIGMA = TIME_SPACE_SIGMA
DEFAULT_NU = 0.02
DEFAULT_RATIO = 5.0 / 6.0

LAYOUT = [
    OperatorSlot("dirac_boundary", DiffOp.identity(2), BOUNDARY),
    OperatorSlot("dirac", DiffOp.identity(2), INTERIOR),
    OperatorSlot("dx", DiffOp.partial(1, 1, 2, "Dx"), INTERIOR),
    OperatorSlot("dxx", DiffOp.partial(1, 2, 2, "Dxx"), INTERIOR),
    OperatorSlot("dt", DiffOp.partial(0, 1, 2, "Dt"), INTERIOR),
]


def boundary_data(points: np.ndarray) -> np.ndarray:
    """-sin(pi x) on the initial face, zero on the sides x = +-1."""
    t, x = points[:, 0], points[:, 1]
    return np.where(t == 0.0, -np.sin(np.pi * x), 0.0)


def burgers_problem(
    n: int,
    m: int,
    sigma_t: float = DEFAULT_SIGMA[0],
    sigma_x: float = DEFAULT_SIGMA[1],
    nu: float = DEFAULT_NU,
    seed: int = 0,
    ratio: float = DEFAULT_RATIO,
    kernel: Optional[KernelSpec] = None,
) -> Tuple[ProblemSpec, EliminationMap]:
    """
    Build the Burgers problem on N space-time samples with M inducing points.

    Raises:
        InvalidArgumentError: If nu is not positive
    """
    if not nu > 0.0:
        raise InvalidArgumentError(f"viscosity must be positive, got {nu}")
    kernel = kernel or KernelSpec(type=KernelType.GAUSSIAN_ANISO, sigma=(sigma_t, sigma_x))
    samples, inducing, psi, phi = instantiate(DOMAIN, LAYOUT, n, m, ratio, seed)
    n_int = samples.n_interior
    n_bdy = samples.n_boundary
    g = boundary_data(samples.boundary)
    free_dim = 3 * n_int

    def z_of_w(w: np.ndarray) -> np.ndarray:
        u, ux, uxx = w[:n_int], w[n_int:2 * n_int], w[2 * n_int:]
        return np.concatenate([g, w, nu * uxx - u * ux])

    def jacobian(w: np.ndarray) -> sparse.csr_matrix:
        u, ux = w[:n_int], w[n_int:2 * n_int]
        ut_rows = sparse.hstack(
            [sparse.diags(-ux), sparse.diags(-u), nu * sparse.eye(n_int)], format="csr"
        )
        return sparse.vstack(
            [zero_rows(n_bdy, free_dim), identity_rows(free_dim, free_dim, 0), ut_rows],
            format="csr",
        )

    def constraint_residual(z: np.ndarray) -> float:
        u = z[n_bdy:n_bdy + n_int]
        ux = z[n_bdy + n_int:n_bdy + 2 * n_int]
        uxx = z[n_bdy + 2 * n_int:n_bdy + 3 * n_int]
        ut = z[n_bdy + 3 * n_int:]
        parts = [np.abs(z[:n_bdy] - g), np.abs(ut + u * ux - nu * uxx)]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    spec = ProblemSpec(
        name=NAME,
        domain=DOMAIN,
        params={"nu": nu},
        kernel=kernel,
        layout_psi=LAYOUT,
        layout_phi=LAYOUT,
        samples=samples,
        inducing=inducing,
        psi=psi,
        phi=phi,
        constraint_residual=constraint_residual,
        reference=lambda points: np.asarray(cole_hopf_burgers(points[:, 0], points[:, 1], nu)),
        axis_names=("t", "x"),
    )
    elimination = EliminationMap(
        free_dim=free_dim,
        fields=(FieldMap("u", 1.0, z_of_w, jacobian),),
    )
    return spec, elimination
