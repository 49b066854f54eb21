"""
Nonlinear parabolic benchmark on (t, x) in (0, 1] x (0, 3/2):

    u_t - u_xx + |u_x|^2 / 2 + u + x u_x = f,

with the prescribed solution u = (sin(pi x) + 2 cos(2 pi x)) e^-t supplying f
and the initial and side data.
"""

from typing import Optional, Tuple

import numpy as np
from scipy import sparse

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

NAME = "parabolic"
DOMAIN = Domain(bounds=((0.0, 1.0), (0.0, 1.5)), time_axis=0)
DEFAULT_SIGMA = TIME_SPACE_SIGMA
DEFAULT_RATIO = 6.0 / 7.0

LAYOUT = [
    OperatorSlot("dirac_boundary", DiffOp.identity(2), BOUNDARY),
    OperatorSlot("dirac", DiffOp.identity(2), INTERIOR),
    OperatorSlot("dx", DiffOp.partial(1, 1, 2, "Dx"), INTERIOR),
    OperatorSlot("dxx", DiffOp.partial(1, 2, 2, "Dxx"), INTERIOR),
    OperatorSlot("dt", DiffOp.partial(0, 1, 2, "Dt"), INTERIOR),
]

PI = np.pi


def exact_solution(points: np.ndarray) -> np.ndarray:
    t, x = points[:, 0], points[:, 1]
    return (np.sin(PI * x) + 2.0 * np.cos(2 * PI * x)) * np.exp(-t)


def exact_dx(points: np.ndarray) -> np.ndarray:
    t, x = points[:, 0], points[:, 1]
    return (PI * np.cos(PI * x) - 4 * PI * np.sin(2 * PI * x)) * np.exp(-t)


def exact_dxx(points: np.ndarray) -> np.ndarray:
    t, x = points[:, 0], points[:, 1]
    return (-(PI**2) * np.sin(PI * x) - 8 * PI**2 * np.cos(2 * PI * x)) * np.exp(-t)


def exact_dt(points: np.ndarray) -> np.ndarray:
    return -exact_solution(points)


def forcing(points: np.ndarray) -> np.ndarray:
    """f = u_t - u_xx + u_x^2 / 2 + u + x u_x for the prescribed u."""
    x = points[:, 1]
    ux = exact_dx(points)
    return exact_dt(points) - exact_dxx(points) + 0.5 * ux * ux + exact_solution(points) + x * ux


def parabolic_problem(
    n: int,
    m: int,
    sigma_t: float = DEFAULT_SIGMA[0],
    sigma_x: float = DEFAULT_SIGMA[1],
    seed: int = 0,
    ratio: float = DEFAULT_RATIO,
    kernel: Optional[KernelSpec] = None,
) -> Tuple[ProblemSpec, EliminationMap]:
    """Build the parabolic problem on N space-time samples with M inducing points."""
    kernel = kernel or KernelSpec(type=KernelType.GAUSSIAN_ANISO, sigma=(sigma_t, sigma_x))
    samples, inducing, psi, phi = instantiate(DOMAIN, LAYOUT, n, m, ratio, seed)
    n_int = samples.n_interior
    n_bdy = samples.n_boundary
    g = exact_solution(samples.boundary)
    x = samples.interior[:, 1]
    f = forcing(samples.interior)
    free_dim = 3 * n_int

    def z_of_w(w: np.ndarray) -> np.ndarray:
        u, ux, uxx = w[:n_int], w[n_int:2 * n_int], w[2 * n_int:]
        ut = uxx - 0.5 * ux * ux - u - x * ux + f
        return np.concatenate([g, w, ut])

    def jacobian(w: np.ndarray) -> sparse.csr_matrix:
        ux = w[n_int:2 * n_int]
        ut_rows = sparse.hstack(
            [-sparse.eye(n_int), sparse.diags(-ux - x), sparse.eye(n_int)], format="csr"
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
        pde = ut - uxx + 0.5 * ux * ux + u + x * ux - f
        parts = [np.abs(z[:n_bdy] - g), np.abs(pde)]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    spec = ProblemSpec(
        name=NAME,
        domain=DOMAIN,
        params={},
        kernel=kernel,
        layout_psi=LAYOUT,
        layout_phi=LAYOUT,
        samples=samples,
        inducing=inducing,
        psi=psi,
        phi=phi,
        constraint_residual=constraint_residual,
        reference=exact_solution,
        axis_names=("t", "x"),
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
            exact_solution(spec.samples.boundary),
            exact_solution(interior),
            exact_dx(interior),
            exact_dxx(interior),
            exact_dt(interior),
        ]
    )
