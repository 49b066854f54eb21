"""
Inverse actions of the sample covariance Sigma = gamma I + Q(psi, psi).

LowRankInverse never forms gamma^-1/2 L^-1 B or I + A A^T. With C = L^-1 B it
takes the thin QR factorization C^T = U R_c and the triangular factor T of

    [R_c^T; gamma^1/2 I] = Q' T,   T^T T = R_c R_c^T + gamma I,

so that

    Sigma^-1 = U (T^T T)^-1 U^T + gamma^-1 (I - U U^T).

Every product with Sigma^-1 then splits into a range part solved against T
and a complement part that is a projection residual; nothing of size
gamma^-1 |v|^2 is ever subtracted. whiten() returns W v with W^T W = Sigma^-1,
which is how Gauss-Newton builds its normal matrix.

DenseInverse factorizes gamma I + K(psi, psi) directly and backs the full-GP
method. Both accept dense vectors, dense matrices and scipy.sparse matrices.
"""

import logging
import math
from dataclasses import dataclass
from typing import Protocol, Union

import numpy as np
from numpy.linalg import LinAlgError
from scipy import linalg, sparse

from sgpde.errors import InvalidArgumentError, NumericalFailureError
from sgpde.solver.gram_assembly import CholeskyFactor

logger = logging.getLogger(__name__)

Operand = Union[np.ndarray, sparse.spmatrix, sparse.sparray]


class CovarianceInverse(Protocol):
    """Operations the Gauss-Newton and ELBO code need from Sigma^-1."""

    gamma: float
    n: int

    def apply_inverse(self, v: Operand) -> np.ndarray: ...

    def whiten(self, v: Operand) -> np.ndarray: ...

    def weighted_gram(self, jac: Operand) -> np.ndarray: ...

    def quad_form(self, z: np.ndarray) -> float: ...

    def log_det(self) -> float: ...

    def trace_correction(self, psi_diag: np.ndarray) -> float: ...


def _check_rows(v: Operand, n: int) -> None:
    if v.shape[0] != n:
        raise InvalidArgumentError(f"operand has {v.shape[0]} rows, expected {n}")


def _dense(v: Operand) -> np.ndarray:
    return v.toarray() if sparse.issparse(v) else np.asarray(v, dtype=float)


@dataclass(frozen=True)
class LowRankInverse:
    """
    Factorized (gamma I + Q(psi, psi))^-1.

    basis is U (R_bar x k, orthonormal columns), coupling is R_c (k x R) and
    inner_factor is T (k x k, upper, positive diagonal), with k = min(R, R_bar).
    """
    basis: np.ndarray
    coupling: np.ndarray
    inner_factor: np.ndarray
    gamma: float
    n: int

    @classmethod
    def factorize(
        cls, l_factor: CholeskyFactor, cross: np.ndarray, gamma: float
    ) -> "LowRankInverse":
        """
        Orthogonal factorization of L^-1 B and of the inner matrix.

        Args:
            l_factor: Cholesky factor of the regularized theta
            cross: B = K(phi, psi), shape (R, R_bar)
            gamma: Regularization weight (> 0)

        Returns:
            LowRankInverse

        Raises:
            InvalidArgumentError: On a non-positive gamma or mismatched shapes
            NumericalFailureError: On non-finite inputs or a singular inner factor
        """
        if not gamma > 0.0:
            raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
        lower = l_factor.lower
        if cross.ndim != 2 or cross.shape[0] != lower.shape[0]:
            raise InvalidArgumentError(
                f"cross has shape {cross.shape}; theta factor is {lower.shape}"
            )
        whitened_cross = linalg.solve_triangular(lower, cross, lower=True, check_finite=False)
        if not np.all(np.isfinite(whitened_cross)):
            raise NumericalFailureError("non-finite entries in L^-1 B")

        try:
            basis, coupling = linalg.qr(whitened_cross.T, mode="economic", check_finite=False)
            rank = basis.shape[1]
            stacked = np.vstack([coupling.T, math.sqrt(gamma) * np.eye(rank)])
            inner = linalg.qr(stacked, mode="r", check_finite=False)[0][:rank]
        except (LinAlgError, ValueError) as e:
            raise NumericalFailureError(f"QR of L^-1 B failed: {e}") from e

        # row signs so that T has a positive diagonal; T^T T is unchanged
        signs = np.where(np.diag(inner) < 0.0, -1.0, 1.0)
        inner = inner * signs[:, None]
        if not np.all(np.diag(inner) > 0.0):
            raise NumericalFailureError("inner factor of gamma I + C C^T is singular")

        logger.debug(f"Factorized low-rank inverse: R={lower.shape[0]}, R_bar={cross.shape[1]}")
        return cls(
            basis=basis,
            coupling=coupling,
            inner_factor=inner,
            gamma=float(gamma),
            n=cross.shape[1],
        )

    def _project(self, v: np.ndarray) -> np.ndarray:
        return self.basis.T @ v

    def _inner_solve(self, x: np.ndarray) -> np.ndarray:
        return linalg.cho_solve((self.inner_factor, False), x, check_finite=False)

    def apply_inverse(self, v: Operand) -> np.ndarray:
        """U (T^T T)^-1 U^T v + gamma^-1 (v - U U^T v) for a vector or the columns of a matrix."""
        _check_rows(v, self.n)
        dense_v = _dense(v)
        projected = self._project(dense_v)
        complement = dense_v - self.basis @ projected
        return self.basis @ self._inner_solve(projected) + complement / self.gamma

    def whiten(self, v: Operand) -> np.ndarray:
        """
        W v with W^T W = Sigma^-1: the k rows T^-T U^T v stacked over the
        R_bar rows gamma^-1/2 (v - U U^T v).
        """
        _check_rows(v, self.n)
        dense_v = _dense(v)
        projected = self._project(dense_v)
        top = linalg.solve_triangular(
            self.inner_factor, projected, lower=False, trans="T", check_finite=False
        )
        bottom = (dense_v - self.basis @ projected) / math.sqrt(self.gamma)
        return np.concatenate([top, bottom], axis=0)

    def weighted_gram(self, jac: Operand) -> np.ndarray:
        """jac^T Sigma^-1 jac as the Gram matrix of whiten(jac)."""
        y = self.whiten(jac)
        return y.T @ y

    def quad_form(self, z: np.ndarray) -> float:
        """z^T Sigma^-1 z = |whiten(z)|^2."""
        y = self.whiten(z)
        return float(y @ y)

    def inducing_weights(self, z: np.ndarray) -> np.ndarray:
        """
        L^-1 B Sigma^-1 z = R_c^T (T^T T)^-1 U^T z.

        The gamma^-1 complement term of Sigma^-1 z lies in the null space of B
        and is dropped exactly rather than cancelled in floating point.
        """
        _check_rows(z, self.n)
        return self.coupling.T @ self._inner_solve(self._project(np.asarray(z, dtype=float)))

    def log_det(self) -> float:
        """log det(gamma I + Q) = (R_bar - k) log gamma + 2 sum log T_ii."""
        rank = self.inner_factor.shape[0]
        return (self.n - rank) * math.log(self.gamma) + 2.0 * float(
            np.sum(np.log(np.diag(self.inner_factor)))
        )

    def trace_correction(self, psi_diag: np.ndarray) -> float:
        """Tr(K(psi, psi)) - Tr(Q(psi, psi)) with Tr(Q) = |R_c|_F^2."""
        _check_rows(psi_diag, self.n)
        return float(np.sum(psi_diag) - np.sum(self.coupling * self.coupling))

    def q_matvec(self, v: np.ndarray) -> np.ndarray:
        """Q(psi, psi) v = U R_c R_c^T U^T v."""
        return self.basis @ (self.coupling @ (self.coupling.T @ (self.basis.T @ v)))


@dataclass(frozen=True)
class DenseInverse:
    """Factorized (gamma I + K(psi, psi))^-1 for the full-GP method."""
    chol: np.ndarray
    gamma: float
    n: int

    @classmethod
    def factorize(cls, dense_psi: np.ndarray, gamma: float) -> "DenseInverse":
        """
        Cholesky of gamma I + K(psi, psi).

        Raises:
            InvalidArgumentError: On a non-positive gamma
            NumericalFailureError: If the matrix is not numerically positive definite
        """
        if not gamma > 0.0:
            raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
        sigma = np.array(dense_psi, dtype=float)
        sigma[np.diag_indices_from(sigma)] += gamma
        try:
            chol = linalg.cholesky(sigma, lower=True)
        except (LinAlgError, ValueError) as e:
            raise NumericalFailureError(f"Cholesky of gamma I + K(psi, psi) failed: {e}") from e
        return cls(chol=chol, gamma=float(gamma), n=sigma.shape[0])

    def apply_inverse(self, v: Operand) -> np.ndarray:
        _check_rows(v, self.n)
        return linalg.cho_solve((self.chol, True), _dense(v), check_finite=False)

    def whiten(self, v: Operand) -> np.ndarray:
        """L^-1 v."""
        _check_rows(v, self.n)
        return linalg.solve_triangular(self.chol, _dense(v), lower=True, check_finite=False)

    def weighted_gram(self, jac: Operand) -> np.ndarray:
        y = self.whiten(jac)
        return y.T @ y

    def quad_form(self, z: np.ndarray) -> float:
        y = self.whiten(z)
        return float(y @ y)

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def trace_correction(self, psi_diag: np.ndarray) -> float:
        # Q(psi, psi) = K(psi, psi) on the full-GP path
        _check_rows(psi_diag, self.n)
        return 0.0
