"""
Shared problem types.

A problem is described by its functional layout (which operators are applied
on which stratum) and by an EliminationMap that parameterizes the constraint
set {F(z) = y} by free variables w. Problems with soft PDE residuals (the MFG
system) also carry a residual map and a diagonal penalty.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from sgpde.errors import InvalidArgumentError
from sgpde.models.kernel import KernelSpec
from sgpde.solver.collocation import (
    Domain,
    FunctionalVector,
    InducingSet,
    OperatorSlot,
    SampleSet,
    build_functionals,
    sample_collocation,
    select_inducing,
)

logger = logging.getLogger(__name__)

VectorMap = Callable[[np.ndarray], np.ndarray]
JacobianMap = Callable[[np.ndarray], sparse.csr_matrix]
PointFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FieldMap:
    """
    One unknown function's reduced variables z_f(w).

    The objective carries weight * z_f^T Sigma^-1 z_f for each field.
    """
    label: str
    weight: float
    z_of_w: VectorMap
    jacobian: JacobianMap


@dataclass(frozen=True)
class EliminationMap:
    """
    Free-variable parameterization of a problem's constraint set.

    Attributes:
        free_dim: Length of w
        fields: Reduced variables per unknown function
        residual: Optional soft residuals r(w), penalized by |r|^2
        residual_jacobian: Jacobian of residual
        penalty: Optional diagonal D, penalized by w^T D w
    """
    free_dim: int
    fields: Tuple[FieldMap, ...]
    residual: Optional[VectorMap] = None
    residual_jacobian: Optional[JacobianMap] = None
    penalty: Optional[np.ndarray] = None

    def z_of_w(self, w: np.ndarray) -> np.ndarray:
        """All fields' reduced variables, concatenated."""
        self._check(w)
        return np.concatenate([f.z_of_w(w) for f in self.fields])

    def jacobian(self, w: np.ndarray) -> sparse.csr_matrix:
        """Jacobian of z_of_w, shape (sum of field lengths, free_dim)."""
        self._check(w)
        return sparse.vstack([f.jacobian(w) for f in self.fields], format="csr")

    def _check(self, w: np.ndarray) -> None:
        if w.shape != (self.free_dim,):
            raise InvalidArgumentError(f"free vector has shape {w.shape}, expected ({self.free_dim},)")


@dataclass
class ProblemSpec:
    """
    A benchmark problem instantiated on concrete samples.

    `reference` evaluates the exact solution (or the reference grid) at an
    (n, d) array of points when one is known. `constraint_residual` returns
    max |F(z) - y| for the concatenated reduced variables.
    """
    name: str
    domain: Domain
    params: Dict[str, float]
    kernel: KernelSpec
    layout_psi: List[OperatorSlot]
    layout_phi: List[OperatorSlot]
    samples: SampleSet
    inducing: InducingSet
    psi: FunctionalVector
    phi: FunctionalVector
    constraint_residual: Callable[[np.ndarray], float]
    reference: Optional[PointFunction] = None
    axis_names: Tuple[str, ...] = ("x1", "x2")
    fields: Tuple[str, ...] = ("u",)
    primary_field: str = "u"
    extras: Dict[str, object] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.n_total

    @property
    def m(self) -> int:
        return self.inducing.m_total


def instantiate(
    domain: Domain,
    layout: List[OperatorSlot],
    n: int,
    m: int,
    interior_ratio: float,
    seed: int,
) -> Tuple[SampleSet, InducingSet, FunctionalVector, FunctionalVector]:
    """
    Sample points, pick inducing points and build psi and phi for one layout.

    Returns:
        (samples, inducing, psi, phi)
    """
    samples = sample_collocation(domain, n, interior_ratio, seed)
    inducing = select_inducing(samples, m, interior_ratio, seed)
    psi = build_functionals(layout, samples)
    phi = build_functionals(layout, inducing.subset(samples))
    logger.info(f"Built functionals: |psi|={len(psi)}, |phi|={len(phi)}")
    return samples, inducing, psi, phi


def identity_rows(size: int, free_dim: int, offset: int) -> sparse.csr_matrix:
    """Sparse selector picking w[offset:offset + size]."""
    return sparse.eye(size, free_dim, k=offset, format="csr")


def zero_rows(size: int, free_dim: int) -> sparse.csr_matrix:
    return sparse.csr_matrix((size, free_dim))
