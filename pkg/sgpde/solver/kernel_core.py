"""
Kernel evaluation under differential-operator functionals.

All supported kernels factor into per-axis 1-D kernels, so a bilinear form
(L_left x L_right) K is assembled from per-axis derivative tables
k_i^(n)(x_i - y_i), n <= 4, combined by the product rule. Derivatives with
respect to the second argument pick up a factor (-1)^order.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from sgpde.errors import InvalidArgumentError, UnsupportedOperatorError
from sgpde.models.kernel import KernelSpec, KernelType

logger = logging.getLogger(__name__)

MAX_TERM_ORDER = 2

MultiIndex = Tuple[int, ...]


@dataclass(frozen=True)
class DiffOp:
    """A linear differential operator sum_k coeff_k * d^multi_index_k."""
    terms: Tuple[Tuple[MultiIndex, float], ...]
    label: str = ""

    def __post_init__(self) -> None:
        if not self.terms:
            raise InvalidArgumentError("a differential operator needs at least one term")
        dims = {len(index) for index, _ in self.terms}
        if len(dims) != 1:
            raise InvalidArgumentError("all terms must have the same number of axes")
        for index, coeff in self.terms:
            if any(order < 0 for order in index):
                raise InvalidArgumentError(f"negative derivative order in {index}")
            if sum(index) > MAX_TERM_ORDER:
                raise UnsupportedOperatorError(
                    f"term {index} has order {sum(index)} > {MAX_TERM_ORDER}"
                )
            if not math.isfinite(coeff):
                raise InvalidArgumentError(f"non-finite coefficient {coeff}")

    @property
    def dim(self) -> int:
        return len(self.terms[0][0])

    @property
    def order(self) -> int:
        return max(sum(index) for index, _ in self.terms)

    # Common operators ---------------------------------------------------

    @classmethod
    def identity(cls, dim: int) -> "DiffOp":
        return cls(terms=(((0,) * dim, 1.0),), label="Id")

    @classmethod
    def partial(cls, axis: int, order: int, dim: int, label: str = "") -> "DiffOp":
        index = tuple(order if i == axis else 0 for i in range(dim))
        return cls(terms=((index, 1.0),), label=label or f"D{axis}^{order}")

    @classmethod
    def sum_d1(cls, dim: int) -> "DiffOp":
        terms = tuple(
            (tuple(1 if i == axis else 0 for i in range(dim)), 1.0) for axis in range(dim)
        )
        return cls(terms=terms, label="SumD1")

    @classmethod
    def laplacian(cls, dim: int, axes: Sequence[int] = ()) -> "DiffOp":
        axes = tuple(axes) or tuple(range(dim))
        terms = tuple(
            (tuple(2 if i == axis else 0 for i in range(dim)), 1.0) for axis in axes
        )
        return cls(terms=terms, label="Laplacian")


@dataclass(frozen=True)
class Functional:
    """A point paired with a differential operator: delta_point o op."""
    point: Tuple[float, ...]
    op: DiffOp

    def sort_key(self) -> Tuple:
        return (self.op.terms, self.point)


# 1-D derivative tables ---------------------------------------------------------


class _GaussianAxis:
    """k(d) = exp(-d^2 / (2 sigma^2)); k^(n) = (-1/sigma)^n He_n(d/sigma) k."""

    def __init__(self, sigma: float):
        self.sigma = sigma

    def table(self, d: np.ndarray, max_order: int) -> List[np.ndarray]:
        h = d / self.sigma
        h2 = h * h
        base = np.exp(-0.5 * h2)
        inv = 1.0 / self.sigma
        out = [base]
        if max_order >= 1:
            out.append(-inv * h * base)
        if max_order >= 2:
            out.append(inv**2 * (h2 - 1.0) * base)
        if max_order >= 3:
            out.append(-(inv**3) * h * (h2 - 3.0) * base)
        if max_order >= 4:
            out.append(inv**4 * (h2 * (h2 - 6.0) + 3.0) * base)
        return out


class _PeriodicAxis:
    """k(d) = exp(a (cos(w d) - 1)), w = 2 pi / period, a = 1 / lengthscale^2."""

    def __init__(self, lengthscale: float, period: float):
        self.a = 1.0 / (lengthscale * lengthscale)
        self.w = 2.0 * math.pi / period

    def table(self, d: np.ndarray, max_order: int) -> List[np.ndarray]:
        theta = self.w * d
        c = np.cos(theta)
        s = np.sin(theta)
        a, w = self.a, self.w
        base = np.exp(a * (c - 1.0))
        out = [base]
        # derivatives of the exponent g = a (c - 1)
        g1 = -a * w * s
        g2 = -a * w * w * c
        if max_order >= 1:
            out.append(g1 * base)
        if max_order >= 2:
            out.append((g2 + g1 * g1) * base)
        if max_order >= 3:
            g3 = a * w**3 * s
            out.append((g3 + 3.0 * g1 * g2 + g1**3) * base)
        if max_order >= 4:
            g3 = a * w**3 * s
            g4 = a * w**4 * c
            out.append(
                (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1**4) * base
            )
        return out


AxisFactor = Union[_GaussianAxis, _PeriodicAxis]


@lru_cache(maxsize=64)
def _axis_factors(spec: KernelSpec) -> Tuple[AxisFactor, ...]:
    if spec.type == KernelType.PERIODIC_EXP:
        return tuple(_PeriodicAxis(ell, spec.period) for ell in spec.lengthscales)
    return tuple(_GaussianAxis(sigma) for sigma in spec.lengthscales)


def _check_points(spec: KernelSpec, points: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != spec.axes:
        raise InvalidArgumentError(
            f"{name} has shape {np.shape(points)}; kernel expects {spec.axes} axes"
        )
    return arr


def _check_op(spec: KernelSpec, op: DiffOp) -> None:
    if op.dim != spec.axes:
        raise InvalidArgumentError(
            f"operator {op.label or op.terms} acts on {op.dim} axes; kernel has {spec.axes}"
        )


def _combine(
    spec: KernelSpec, diffs: np.ndarray, left: DiffOp, right: DiffOp
) -> np.ndarray:
    """Evaluate (left x right) K on an array of differences x - y (last axis = coordinates)."""
    factors = _axis_factors(spec)
    orders_needed = [0] * spec.axes
    for index_l, _ in left.terms:
        for index_r, _ in right.terms:
            for axis in range(spec.axes):
                orders_needed[axis] = max(orders_needed[axis], index_l[axis] + index_r[axis])

    tables = [
        factors[axis].table(diffs[..., axis], orders_needed[axis])
        for axis in range(spec.axes)
    ]

    result = np.zeros(diffs.shape[:-1])
    for index_l, coeff_l in left.terms:
        for index_r, coeff_r in right.terms:
            sign = -1.0 if sum(index_r) % 2 else 1.0
            term = tables[0][index_l[0] + index_r[0]]
            for axis in range(1, spec.axes):
                term = term * tables[axis][index_l[axis] + index_r[axis]]
            result = result + (coeff_l * coeff_r * sign) * term
    return result


# Public API --------------------------------------------------------------------


def operator_block(
    spec: KernelSpec,
    left_points: np.ndarray,
    left_op: DiffOp,
    right_points: np.ndarray,
    right_op: DiffOp,
) -> np.ndarray:
    """
    Matrix of (left_op x right_op) K over all point pairs.

    Args:
        spec: Kernel
        left_points: (n, d) points for the first argument
        left_op: Operator applied to the first argument
        right_points: (m, d) points for the second argument
        right_op: Operator applied to the second argument

    Returns:
        (n, m) array
    """
    _check_op(spec, left_op)
    _check_op(spec, right_op)
    xl = _check_points(spec, left_points, "left_points")
    xr = _check_points(spec, right_points, "right_points")
    diffs = xl[:, None, :] - xr[None, :, :]
    return _combine(spec, diffs, left_op, right_op)


def operator_pairs(
    spec: KernelSpec,
    left_points: np.ndarray,
    left_op: DiffOp,
    right_points: np.ndarray,
    right_op: DiffOp,
) -> np.ndarray:
    """Elementwise (left_op x right_op) K for aligned point lists of equal length."""
    _check_op(spec, left_op)
    _check_op(spec, right_op)
    xl = _check_points(spec, left_points, "left_points")
    xr = _check_points(spec, right_points, "right_points")
    if xl.shape != xr.shape:
        raise InvalidArgumentError(f"point lists differ in shape: {xl.shape} vs {xr.shape}")
    return _combine(spec, xl - xr, left_op, right_op)


def kernel_eval(spec: KernelSpec, x: Sequence[float], y: Sequence[float]) -> float:
    """
    Evaluate the kernel K(x, y).

    Raises:
        InvalidArgumentError: If x or y does not match the kernel's axis count
    """
    identity = DiffOp.identity(spec.axes)
    return float(operator_pairs(spec, np.asarray(x), identity, np.asarray(y), identity)[0])


def bilinear_eval(spec: KernelSpec, left: Functional, right: Functional) -> float:
    """
    Evaluate [left, K right] = (L_left x L_right) K at (left.point, right.point).

    The pair is put in a canonical order first so that swapping the arguments
    gives a bit-identical result.
    """
    first, second = left, right
    if right.sort_key() < left.sort_key():
        # (L2 x L1) K(y, x) = (L1 x L2) K(x, y); evaluate the canonical orientation
        first, second = right, left
    return float(
        operator_pairs(
            spec,
            np.asarray(first.point),
            first.op,
            np.asarray(second.point),
            second.op,
        )[0]
    )


def right_functional_eval(spec: KernelSpec, x: Sequence[float], right: Functional) -> float:
    """Evaluate K(x, right) = L_right applied to K(x, .) at right.point."""
    if right.op.order > MAX_TERM_ORDER:
        raise UnsupportedOperatorError(f"operator order {right.op.order} > {MAX_TERM_ORDER}")
    left = Functional(tuple(float(v) for v in x), DiffOp.identity(spec.axes))
    return bilinear_eval(spec, left, right)


def derivative_tables(
    spec: KernelSpec, d: np.ndarray, max_order: int = 4
) -> Dict[int, List[np.ndarray]]:
    """
    Per-axis 1-D derivative tables k_i^(n)(d), n = 0..max_order.

    Exposed for diagnostics and tests of the separable calculus.
    """
    if max_order > 2 * MAX_TERM_ORDER:
        raise UnsupportedOperatorError(f"tables stop at order {2 * MAX_TERM_ORDER}")
    factors = _axis_factors(spec)
    arr = np.asarray(d, dtype=float)
    return {
        axis: factors[axis].table(arr, max_order)
        for axis in range(spec.axes)
    }
