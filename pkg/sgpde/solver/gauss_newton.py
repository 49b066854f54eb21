"""
Eliminated-variable Gauss-Newton and the representer-form solution model.

The reduced objective is

    sum_f c_f z_f(w)^T Sigma^-1 z_f(w) + |r(w)|^2 + w^T D w,

and each step solves the normal equations

    (sum_f c_f J_f^T Sigma^-1 J_f + J_r^T J_r + D + ridge I) delta
        = -(sum_f c_f J_f^T Sigma^-1 z_f + J_r^T r + D w).

The normal matrix is never formed. With W^T W = Sigma^-1 the whitened
Jacobians W J_f are stacked with J_r and sqrt(D), and the system is solved
from the triangular factor of a QR of that stack.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.linalg import LinAlgError
from scipy import linalg
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from sgpde.config import get_settings
from sgpde.errors import DivergenceError, InvalidArgumentError, NumericalFailureError
from sgpde.models.config import GNConfig, InitKind
from sgpde.models.kernel import KernelSpec
from sgpde.problems.base import EliminationMap
from sgpde.solver.collocation import STREAM_INIT, FunctionalVector, make_rng
from sgpde.solver.gram_assembly import CholeskyFactor, assemble_cross
from sgpde.solver.kernel_core import DiffOp, operator_block
from sgpde.solver.woodbury import CovarianceInverse, LowRankInverse

logger = logging.getLogger(__name__)

RIDGE_FLOOR = 1e-14
RIDGE_GROWTH = 10.0
ESCALATIONS = 3
NON_MONOTONE_RUN = 3
EPS = float(np.finfo(float).eps)


@dataclass
class GNResult:
    """Outcome of a Gauss-Newton solve."""
    w_star: np.ndarray
    z_star: Dict[str, np.ndarray]
    loss_history: List[float]
    iterations: int
    converged: bool
    non_monotone: bool = False

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


def initial_free_vector(elimination: EliminationMap, config: GNConfig, seed: int) -> np.ndarray:
    """Zeros, or a seeded standard-normal draw from the init stream."""
    if config.init == InitKind.NORMAL:
        return make_rng(seed, STREAM_INIT).standard_normal(elimination.free_dim)
    return np.zeros(elimination.free_dim)


def objective(
    elimination: EliminationMap, inverse: CovarianceInverse, w: np.ndarray
) -> float:
    """Reduced objective at w."""
    loss = 0.0
    for f in elimination.fields:
        loss += f.weight * inverse.quad_form(f.z_of_w(w))
    if elimination.residual is not None:
        r = elimination.residual(w)
        loss += float(r @ r)
    if elimination.penalty is not None:
        loss += float(w @ (elimination.penalty * w))
    return loss


def _stacked_system(
    elimination: EliminationMap, inverse: CovarianceInverse, w: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Design matrix D and target t with D^T D the normal matrix and D^T t the
    gradient: whitened field Jacobians, the residual Jacobian and sqrt(D) rows.
    """
    designs: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    for f in elimination.fields:
        scale = math.sqrt(f.weight)
        designs.append(scale * inverse.whiten(f.jacobian(w)))
        targets.append(scale * inverse.whiten(f.z_of_w(w)))
    if elimination.residual is not None and elimination.residual_jacobian is not None:
        designs.append(elimination.residual_jacobian(w).toarray())
        targets.append(np.asarray(elimination.residual(w), dtype=float))
    if elimination.penalty is not None:
        root = np.sqrt(elimination.penalty)
        designs.append(np.diag(root))
        targets.append(root * w)
    return np.vstack(designs), np.concatenate(targets)


def _normal_step(design: np.ndarray, target: np.ndarray, ridge: float) -> np.ndarray:
    """
    delta solving (D^T D + ridge I) delta = -D^T t.

    The normal matrix is factorized as R^T R through a QR of [D, t] stacked
    over [sqrt(ridge) I, 0], so its condition number is never squared.
    """
    size = design.shape[1]
    if size == 0:
        return np.zeros(0)
    augmented = np.empty((design.shape[0] + size, size + 1))
    augmented[: design.shape[0], :size] = design
    augmented[: design.shape[0], size] = target
    augmented[design.shape[0]:, :size] = math.sqrt(ridge) * np.eye(size)
    augmented[design.shape[0]:, size] = 0.0
    upper = linalg.qr(augmented, mode="r", overwrite_a=True, check_finite=False)[0]
    factor = upper[:size, :size]
    diagonal = np.abs(np.diag(factor))
    if not np.all(np.isfinite(upper[:size])) or diagonal.min() <= EPS * diagonal.max():
        raise LinAlgError("normal matrix is singular to working precision")
    return -linalg.solve_triangular(factor, upper[:size, size], lower=False, check_finite=False)


def _solve_normal(design: np.ndarray, target: np.ndarray, ridge: float) -> np.ndarray:
    ridge_used = ridge
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(ESCALATIONS + 1),
            retry=retry_if_exception_type(LinAlgError),
            reraise=True,
        ):
            with attempt:
                number = attempt.retry_state.attempt_number
                if number > 1:
                    base = ridge if ridge > 0.0 else RIDGE_FLOOR
                    ridge_used = base * RIDGE_GROWTH ** (number - 1 if ridge > 0.0 else number - 2)
                    logger.warning(f"Normal matrix singular; escalating ridge to {ridge_used:.3e}")
                return _normal_step(design, target, ridge_used)
    except LinAlgError as e:
        raise NumericalFailureError(
            f"normal matrix factorization failed (final ridge {ridge_used:.3e})"
        ) from e
    raise NumericalFailureError("normal matrix factorization did not run")


def _flags_non_monotone(history: List[float]) -> bool:
    run = 0
    for previous, current in zip(history, history[1:]):
        run = run + 1 if current > previous else 0
        if run >= NON_MONOTONE_RUN:
            return True
    return False


def solve(
    elimination: EliminationMap,
    inverse: CovarianceInverse,
    config: GNConfig,
    w0: Optional[np.ndarray] = None,
) -> GNResult:
    """
    Minimize the reduced objective by Gauss-Newton.

    A step whose sup-norm is below config.step_tol ends the loop without being
    applied or counted, so iterations is the number of applied steps and
    loss_history has iterations + 1 entries.

    Args:
        elimination: Free-variable map of the problem
        inverse: Sigma^-1 for the problem's psi
        config: Gauss-Newton settings
        w0: Initial free vector (zeros when omitted)

    Returns:
        GNResult

    Raises:
        NumericalFailureError: If the normal matrix cannot be factorized
        DivergenceError: On a non-finite iterate or loss
    """
    w = np.zeros(elimination.free_dim) if w0 is None else np.array(w0, dtype=float)
    if w.shape != (elimination.free_dim,):
        raise InvalidArgumentError(
            f"initial vector has shape {w.shape}, expected ({elimination.free_dim},)"
        )

    history = [objective(elimination, inverse, w)]
    iterations = 0
    converged = False
    logger.info(f"Gauss-Newton start: free_dim={elimination.free_dim}, loss={history[0]:.6e}")

    for _ in range(config.max_iter):
        design, target = _stacked_system(elimination, inverse, w)
        step = config.step_size * _solve_normal(design, target, config.ridge)
        if not np.all(np.isfinite(step)):
            raise DivergenceError("non-finite Gauss-Newton step", last_finite=w.copy())

        step_norm = float(np.max(np.abs(step))) if step.size else 0.0
        if step_norm < config.step_tol:
            converged = True
            break

        candidate = w + step
        loss = objective(elimination, inverse, candidate)
        if not np.isfinite(loss):
            raise DivergenceError("non-finite loss after Gauss-Newton step", last_finite=w.copy())
        w = candidate
        iterations += 1
        history.append(loss)
        logger.info(f"Gauss-Newton iteration {iterations}: loss={loss:.6e}, step={step_norm:.3e}")

    non_monotone = _flags_non_monotone(history)
    if non_monotone:
        logger.warning("Loss increased for 3 consecutive iterations")
    if not converged:
        logger.warning(f"Gauss-Newton stopped at max_iter={config.max_iter} without meeting step_tol")

    return GNResult(
        w_star=w,
        z_star={f.label: f.z_of_w(w) for f in elimination.fields},
        loss_history=history,
        iterations=iterations,
        converged=converged,
        non_monotone=non_monotone,
    )


# Solution model -----------------------------------------------------------------


@dataclass
class SolutionModel:
    """
    u(x) = sum_j beta_j [delta_x, K phi_j].

    For the sparse method beta = Theta_eta^-1 B Sigma^-1 z; for the full-GP
    method phi is psi itself and beta = Sigma^-1 z.
    """
    kernel: KernelSpec
    phi: FunctionalVector
    beta: np.ndarray
    gamma: float
    eta_used: float
    z_star: Optional[np.ndarray] = field(default=None, repr=False)

    def evaluate_batch(self, points: np.ndarray, chunk_rows: Optional[int] = None) -> np.ndarray:
        """Evaluate at an (n, d) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.kernel.axes:
            raise InvalidArgumentError(
                f"points have {pts.shape[1]} coordinates; model expects {self.kernel.axes}"
            )
        chunk = chunk_rows or get_settings().gram_chunk_rows
        identity = DiffOp.identity(self.kernel.axes)
        out = np.zeros(pts.shape[0])
        for start in range(0, pts.shape[0], chunk):
            stop = min(start + chunk, pts.shape[0])
            for block in self.phi.block_layout:
                if not block.length:
                    continue
                values = operator_block(
                    self.kernel,
                    pts[start:stop],
                    identity,
                    self.phi.block_points(block),
                    self.phi.block_op(block),
                )
                out[start:stop] += values @ self.beta[block.start:block.stop]
        return out

    def evaluate(self, x: np.ndarray) -> float:
        """Evaluate at a single point."""
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[None, :])[0])

    def functional_values(self, psi: FunctionalVector) -> np.ndarray:
        """[psi_i, u] for every functional of psi."""
        return assemble_cross(self.kernel, psi, self.phi) @ self.beta

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kernel": self.kernel.model_dump(mode="json"),
            "functionals": self.phi.to_records(),
            "beta": self.beta.tolist(),
            "gamma": self.gamma,
            "eta_used": self.eta_used,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolutionModel":
        return cls(
            kernel=KernelSpec.model_validate(data["kernel"]),
            phi=FunctionalVector.from_records(data["functionals"]),
            beta=np.asarray(data["beta"], dtype=float),
            gamma=float(data["gamma"]),
            eta_used=float(data["eta_used"]),
        )


def build_solution(
    z_star: np.ndarray,
    inverse: LowRankInverse,
    l_factor: CholeskyFactor,
    kernel: KernelSpec,
    phi: FunctionalVector,
) -> SolutionModel:
    """
    Representer coefficients beta = (L L^T)^-1 B Sigma^-1 z*.

    L^-1 B Sigma^-1 z* comes from the low-rank inverse directly, so only the
    final back-substitution against L^T remains.

    Args:
        z_star: Reduced variables at the optimum
        inverse: Low-rank Sigma^-1 built from the same L and B
        l_factor: Cholesky factor of the regularized theta
        kernel: Kernel spec
        phi: Inducing functionals

    Returns:
        SolutionModel
    """
    half = inverse.inducing_weights(z_star)
    beta = linalg.solve_triangular(l_factor.lower, half, lower=True, trans="T", check_finite=False)
    return SolutionModel(
        kernel=kernel,
        phi=phi,
        beta=np.asarray(beta),
        gamma=inverse.gamma,
        eta_used=l_factor.eta_used,
        z_star=z_star,
    )


def build_gp_solution(
    z_star: np.ndarray,
    inverse: CovarianceInverse,
    kernel: KernelSpec,
    psi: FunctionalVector,
) -> SolutionModel:
    """Full-GP model: functionals psi, beta = Sigma^-1 z*."""
    return SolutionModel(
        kernel=kernel,
        phi=psi,
        beta=np.asarray(inverse.apply_inverse(z_star)),
        gamma=inverse.gamma,
        eta_used=0.0,
        z_star=z_star,
    )
