"""
Spectral norm of the Nystrom residual K(psi, psi) - Q(psi, psi).
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from sgpde.errors import InvalidArgumentError
from sgpde.solver.woodbury import LowRankInverse

logger = logging.getLogger(__name__)

TOLERANCE = 1e-6
MAX_ITER = 1000


@dataclass(frozen=True)
class NystromError:
    """Largest-magnitude eigenvalue of the residual and whether ARPACK converged."""
    value: float
    converged: bool = True


def nystrom_error(dense_psi: np.ndarray, lri: LowRankInverse) -> NystromError:
    """
    |K(psi, psi) - Q(psi, psi)|_2 by Lanczos iteration on the symmetric residual.

    The residual is applied matrix-free as v -> K v - Q v. If ARPACK
    does not converge within 1000 iterations the best available estimate is
    returned with converged=False.

    Args:
        dense_psi: Assembled K(psi, psi)
        lri: Low-rank inverse built from the same psi

    Returns:
        NystromError
    """
    n = dense_psi.shape[0]
    if dense_psi.shape != (n, n) or n != lri.n:
        raise InvalidArgumentError(
            f"K(psi, psi) has shape {dense_psi.shape}; low-rank inverse has n={lri.n}"
        )
    if n < 3:
        residual = dense_psi - lri.q_matvec(np.eye(n))
        return NystromError(value=float(np.max(np.abs(np.linalg.eigvalsh(residual)))))

    operator = LinearOperator(
        shape=(n, n),
        matvec=lambda v: dense_psi @ v - lri.q_matvec(v),
        dtype=float,
    )
    try:
        eigenvalues = eigsh(
            operator, k=1, which="LM", tol=TOLERANCE, maxiter=MAX_ITER, return_eigenvectors=False
        )
        return NystromError(value=float(np.abs(eigenvalues).max()))
    except ArpackNoConvergence as e:
        if e.eigenvalues is not None and len(e.eigenvalues):
            estimate = float(np.abs(e.eigenvalues).max())
        else:
            unit = np.full(n, 1.0 / np.sqrt(n))
            estimate = float(abs(unit @ operator.matvec(unit)))
        logger.warning(f"Nystrom error did not converge; best estimate {estimate:.3e}")
        return NystromError(value=estimate, converged=False)
