"""
End-to-end solve of one problem instance: assemble, factorize, Gauss-Newton,
representer models.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from sgpde.models.config import GNConfig, Method
from sgpde.problems.base import EliminationMap, ProblemSpec
from sgpde.solver.gauss_newton import (
    GNResult,
    SolutionModel,
    build_gp_solution,
    build_solution,
    solve,
)
from sgpde.solver.gram_assembly import (
    CholeskyFactor,
    GramBlocks,
    assemble_blocks,
    assemble_theta,
    build_nugget,
    cholesky_theta,
)
from sgpde.solver.woodbury import CovarianceInverse, DenseInverse, LowRankInverse

logger = logging.getLogger(__name__)


@dataclass
class SolveOutcome:
    """Everything a solve produced, for artifacts and diagnostics."""
    spec: ProblemSpec
    elimination: EliminationMap
    inverse: CovarianceInverse
    result: GNResult
    models: Dict[str, SolutionModel]
    psi_diag: np.ndarray
    blocks: Optional[GramBlocks] = None
    factor: Optional[CholeskyFactor] = None
    dense_psi: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def eta_used(self) -> float:
        return self.factor.eta_used if self.factor is not None else 0.0

    @property
    def primary_model(self) -> SolutionModel:
        return self.models[self.spec.primary_field]

    @property
    def reduced(self) -> np.ndarray:
        """All fields' reduced variables in field order."""
        return np.concatenate([self.result.z_star[f.label] for f in self.elimination.fields])


class SolverPipeline:
    """
    Runs the sparse (or full-GP) collocation solve for a problem instance.

    The sparse path assembles Theta, B and diag K(psi, psi), factorizes
    Theta + eta R, builds the Woodbury inverse and runs Gauss-Newton. The GP
    path factorizes gamma I + K(psi, psi) densely instead.
    """

    def __init__(
        self,
        gamma: float,
        eta: float,
        gn: GNConfig,
        method: Method = Method.SGP,
        include_dense_psi: bool = False,
    ):
        """
        Initialize the pipeline.

        Args:
            gamma: Regularization weight
            eta: Nugget magnitude
            gn: Gauss-Newton settings
            method: Sparse or full-GP method
            include_dense_psi: Also keep K(psi, psi) for diagnostics
        """
        self.gamma = gamma
        self.eta = eta
        self.gn = gn
        self.method = method
        self.include_dense_psi = include_dense_psi

    def run(
        self,
        spec: ProblemSpec,
        elimination: EliminationMap,
        w0: Optional[np.ndarray] = None,
    ) -> SolveOutcome:
        """
        Solve one instance.

        Raises:
            NumericalFailureError: On factorization failure
            DivergenceError: On a non-finite Gauss-Newton iterate
        """
        logger.info(
            f"Solving {spec.name} with {self.method.value}: N={spec.n}, M={spec.m}, "
            f"gamma={self.gamma:.1e}, eta={self.eta:.1e}"
        )
        if self.method == Method.GP:
            return self._run_gp(spec, elimination, w0)
        return self._run_sgp(spec, elimination, w0)

    def _run_sgp(
        self, spec: ProblemSpec, elimination: EliminationMap, w0: Optional[np.ndarray]
    ) -> SolveOutcome:
        blocks = assemble_blocks(spec.kernel, spec.phi, spec.psi, self.include_dense_psi)
        nugget = build_nugget(blocks.theta, spec.phi.block_layout, self.eta)
        factor = cholesky_theta(blocks.theta, nugget)
        inverse = LowRankInverse.factorize(factor, blocks.cross, self.gamma)
        result = solve(elimination, inverse, self.gn, w0)
        models = {
            label: build_solution(z, inverse, factor, spec.kernel, spec.phi)
            for label, z in result.z_star.items()
        }
        return SolveOutcome(
            spec=spec,
            elimination=elimination,
            inverse=inverse,
            result=result,
            models=models,
            psi_diag=blocks.psi_diag,
            blocks=blocks,
            factor=factor,
            dense_psi=blocks.dense_psi,
        )

    def _run_gp(
        self, spec: ProblemSpec, elimination: EliminationMap, w0: Optional[np.ndarray]
    ) -> SolveOutcome:
        dense_psi = assemble_theta(spec.kernel, spec.psi)
        inverse = DenseInverse.factorize(dense_psi, self.gamma)
        result = solve(elimination, inverse, self.gn, w0)
        models = {
            label: build_gp_solution(z, inverse, spec.kernel, spec.psi)
            for label, z in result.z_star.items()
        }
        return SolveOutcome(
            spec=spec,
            elimination=elimination,
            inverse=inverse,
            result=result,
            models=models,
            psi_diag=np.diag(dense_psi).copy(),
            dense_psi=dense_psi,
        )
