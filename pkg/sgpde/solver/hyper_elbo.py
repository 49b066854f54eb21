"""
Evidence lower bound and the lengthscale grid search.

    F = -(R_bar / 2) ln 2 pi - 1/2 log det(Sigma) - z^T Sigma^-1 z
        - Tr(K(psi, psi) - Q(psi, psi)) / (2 gamma)

The quadratic term carries coefficient 1 unless half_quadratic is set.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from sgpde.errors import NumericalFailureError
from sgpde.models.summary import GridCell
from sgpde.solver.pipeline import SolveOutcome
from sgpde.solver.woodbury import CovarianceInverse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ElboTerms:
    """The four additive terms of F."""
    constant: float
    log_det: float
    quadratic: float
    trace: float

    @property
    def total(self) -> float:
        return self.constant + self.log_det + self.quadratic + self.trace


def elbo_terms(
    z: np.ndarray,
    inverse: CovarianceInverse,
    psi_diag: np.ndarray,
    half_quadratic: bool = False,
) -> ElboTerms:
    """Each signed term of F for reduced variables z."""
    coefficient = 0.5 if half_quadratic else 1.0
    return ElboTerms(
        constant=-0.5 * inverse.n * math.log(2.0 * math.pi),
        log_det=-0.5 * inverse.log_det(),
        quadratic=-coefficient * inverse.quad_form(z),
        trace=-inverse.trace_correction(psi_diag) / (2.0 * inverse.gamma),
    )


def elbo(
    z: np.ndarray,
    inverse: CovarianceInverse,
    psi_diag: np.ndarray,
    half_quadratic: bool = False,
) -> float:
    """Evidence lower bound F(z, q*)."""
    return elbo_terms(z, inverse, psi_diag, half_quadratic).total


def outcome_elbo(outcome: SolveOutcome, half_quadratic: bool = False) -> float:
    """F at the solved reduced variables, summed over unknown functions."""
    return sum(
        elbo(z, outcome.inverse, outcome.psi_diag, half_quadratic)
        for z in outcome.result.z_star.values()
    )


CellSolver = Callable[[float], SolveOutcome]
CellError = Callable[[SolveOutcome], Optional[float]]


def select_best(cells: Sequence[GridCell]) -> GridCell:
    """
    Cell with the largest ELBO; ties go to the larger lengthscale.

    Raises:
        NumericalFailureError: If no cell succeeded
    """
    ok = [c for c in cells if c.ok and c.elbo is not None]
    if not ok:
        raise NumericalFailureError("every grid cell failed")
    return max(ok, key=lambda c: (c.elbo, c.sigma))


def grid_search(
    problem_factory: CellSolver,
    grid: Sequence[float],
    half_quadratic: bool = False,
    error_of: Optional[CellError] = None,
) -> Tuple[float, List[GridCell]]:
    """
    Solve at every lengthscale and keep the one maximizing F at z*.

    Args:
        problem_factory: Lengthscale -> solved instance
        grid: Lengthscales (searched in increasing order)
        half_quadratic: ELBO quadratic coefficient switch
        error_of: Optional L-infinity error of a solved instance

    Returns:
        (best lengthscale, table ordered by lengthscale)

    Raises:
        NumericalFailureError: If every cell failed
    """
    cells: List[GridCell] = []
    for sigma in sorted(grid):
        try:
            outcome = problem_factory(sigma)
            cell = GridCell(
                sigma=sigma,
                elbo=outcome_elbo(outcome, half_quadratic),
                iterations=outcome.result.iterations,
                linf_error=error_of(outcome) if error_of is not None else None,
            )
        except NumericalFailureError as e:
            logger.warning(f"Grid cell sigma={sigma} failed: {e}")
            cell = GridCell(sigma=sigma, status="failed", message=str(e))
        logger.info(f"Grid cell sigma={sigma}: elbo={cell.elbo}, status={cell.status}")
        cells.append(cell)

    best = select_best(cells)
    logger.info(f"Best lengthscale {best.sigma} with elbo {best.elbo}")
    return best.sigma, cells
