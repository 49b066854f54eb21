"""
Gram matrix assembly and the nugget-regularized Cholesky factor of Theta.

Theta = K(phi, phi), the cross matrix B = K(phi, psi) and diag K(psi, psi) are
assembled block-by-operator, in row chunks so that peak memory stays at
chunk_rows x block_width temporaries.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd
from numpy.linalg import LinAlgError
from scipy import linalg
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from sgpde.config import get_settings
from sgpde.errors import NumericalFailureError
from sgpde.models.kernel import KernelSpec
from sgpde.solver.collocation import Block, FunctionalVector
from sgpde.solver.kernel_core import operator_block, operator_pairs

logger = logging.getLogger(__name__)

MIN_BLOCK_SCALE = 1e-300
ETA_FLOOR = 1e-14
ETA_GROWTH = 10.0
ESCALATIONS = 3


@dataclass
class GramBlocks:
    """Assembled kernel matrices for one (phi, psi) pair."""
    theta: np.ndarray
    cross: np.ndarray
    psi_diag: np.ndarray
    dense_psi: Optional[np.ndarray] = None


@dataclass(frozen=True)
class NuggetSpec:
    """Block-diagonal nugget eta * R with one scale per operator block of phi."""
    eta: float
    block_scales: np.ndarray
    layout: List[Block]

    def diagonal(self) -> np.ndarray:
        """Diagonal of R expanded to theta's size."""
        return np.repeat(self.block_scales, [b.length for b in self.layout])


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower factor of theta + eta_used * R."""
    lower: np.ndarray
    eta_used: float


def _chunk_rows(chunk_rows: Optional[int]) -> int:
    return chunk_rows if chunk_rows is not None else get_settings().gram_chunk_rows


def _fill(
    kernel: KernelSpec,
    left: FunctionalVector,
    right: FunctionalVector,
    out: np.ndarray,
    chunk_rows: int,
    upper_only: bool = False,
) -> None:
    for lb in left.block_layout:
        left_op = left.block_op(lb) if lb.length else None
        for rb in right.block_layout:
            if not lb.length or not rb.length:
                continue
            if upper_only and rb.stop <= lb.start:
                continue
            right_points = right.block_points(rb)
            right_op = right.block_op(rb)
            for start in range(lb.start, lb.stop, chunk_rows):
                stop = min(start + chunk_rows, lb.stop)
                out[start:stop, rb.start:rb.stop] = operator_block(
                    kernel, left.points[start:stop], left_op, right_points, right_op
                )


def assemble_theta(
    kernel: KernelSpec, phi: FunctionalVector, chunk_rows: Optional[int] = None
) -> np.ndarray:
    """
    Assemble Theta = K(phi, phi).

    Only block-upper entries are evaluated; the strict lower triangle is a
    mirror of the upper one so the result is exactly symmetric.

    Args:
        kernel: Kernel spec
        phi: Inducing functionals
        chunk_rows: Rows per evaluation chunk (defaults to settings)

    Returns:
        (R, R) symmetric matrix
    """
    size = len(phi)
    theta = np.zeros((size, size))
    _fill(kernel, phi, phi, theta, _chunk_rows(chunk_rows), upper_only=True)
    theta = np.triu(theta) + np.triu(theta, 1).T
    logger.debug(f"Assembled theta {theta.shape}")
    return theta


def assemble_cross(
    kernel: KernelSpec,
    phi: FunctionalVector,
    psi: FunctionalVector,
    chunk_rows: Optional[int] = None,
) -> np.ndarray:
    """Assemble B = K(phi, psi), shape (R, R_bar)."""
    cross = np.zeros((len(phi), len(psi)))
    _fill(kernel, phi, psi, cross, _chunk_rows(chunk_rows))
    logger.debug(f"Assembled cross {cross.shape}")
    return cross


def psi_diagonal(kernel: KernelSpec, psi: FunctionalVector) -> np.ndarray:
    """Diagonal entries [psi_j, K psi_j]."""
    diag = np.zeros(len(psi))
    for block in psi.block_layout:
        if not block.length:
            continue
        points = psi.block_points(block)
        op = psi.block_op(block)
        diag[block.start:block.stop] = operator_pairs(kernel, points, op, points, op)
    return diag


def assemble_blocks(
    kernel: KernelSpec,
    phi: FunctionalVector,
    psi: FunctionalVector,
    include_dense_psi: bool = False,
    chunk_rows: Optional[int] = None,
) -> GramBlocks:
    """
    Assemble every kernel matrix the solver needs.

    Args:
        kernel: Kernel spec
        phi: Inducing functionals
        psi: Sample functionals
        include_dense_psi: Also assemble the full K(psi, psi) (diagnostics only)
        chunk_rows: Rows per evaluation chunk

    Returns:
        GramBlocks
    """
    logger.info(f"Assembling Gram blocks: R={len(phi)}, R_bar={len(psi)}")
    return GramBlocks(
        theta=assemble_theta(kernel, phi, chunk_rows),
        cross=assemble_cross(kernel, phi, psi, chunk_rows),
        psi_diag=psi_diagonal(kernel, psi),
        dense_psi=assemble_theta(kernel, psi, chunk_rows) if include_dense_psi else None,
    )


def build_nugget(theta: np.ndarray, layout: List[Block], eta: float) -> NuggetSpec:
    """
    Per-block nugget scales: the mean of theta's diagonal over each block.

    Args:
        theta: Gram matrix of phi
        layout: Block layout of phi
        eta: Nugget magnitude

    Returns:
        NuggetSpec
    """
    diag = np.diag(theta)
    scales = np.array(
        [
            max(float(diag[b.start:b.stop].mean()), MIN_BLOCK_SCALE) if b.length else 1.0
            for b in layout
        ]
    )
    return NuggetSpec(eta=float(eta), block_scales=scales, layout=list(layout))


def _escalated_eta(eta: float, attempt: int) -> float:
    if attempt == 1:
        return eta
    if eta > 0.0:
        return eta * ETA_GROWTH ** (attempt - 1)
    return ETA_FLOOR * ETA_GROWTH ** (attempt - 2)


def cholesky_theta(theta: np.ndarray, nugget: NuggetSpec) -> CholeskyFactor:
    """
    Cholesky factor of theta + eta * R.

    A failed factorization multiplies eta by 10, up to three times. A zero eta
    escalates from 1e-14.

    Raises:
        NumericalFailureError: If theta is not finite or still not positive definite
    """
    if not np.all(np.isfinite(theta)):
        raise NumericalFailureError("theta contains non-finite entries")

    r_diag = nugget.diagonal()
    eta_used = nugget.eta
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(ESCALATIONS + 1),
            retry=retry_if_exception_type(LinAlgError),
            reraise=True,
        ):
            with attempt:
                eta_used = _escalated_eta(nugget.eta, attempt.retry_state.attempt_number)
                if attempt.retry_state.attempt_number > 1:
                    logger.warning(f"Theta not positive definite; escalating eta to {eta_used:.3e}")
                regularized = theta.copy()
                regularized[np.diag_indices_from(regularized)] += eta_used * r_diag
                lower = linalg.cholesky(regularized, lower=True, check_finite=False)
    except LinAlgError as e:
        raise NumericalFailureError(
            f"Cholesky of theta failed after escalation (final eta {eta_used:.3e})"
        ) from e

    logger.info(f"Factorized theta {theta.shape} with eta {eta_used:.3e}")
    return CholeskyFactor(lower=lower, eta_used=eta_used)


def dump_matrices(blocks: GramBlocks, directory: str) -> List[str]:
    """Write theta and cross as headerless CSV files for offline inspection."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, matrix in (("theta", blocks.theta), ("cross", blocks.cross)):
        path = os.path.join(directory, f"{name}.csv")
        pd.DataFrame(matrix).to_csv(path, header=False, index=False, float_format="%.17g")
        paths.append(path)
    logger.info(f"Dumped Gram matrices to {directory}")
    return paths
