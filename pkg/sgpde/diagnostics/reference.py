"""
Reference solutions and grid errors.

- cole_hopf_burgers: viscous Burgers reference by Gauss-Hermite quadrature
- linf_on_grid: sup-norm error on an equally spaced evaluation grid
- ingest_reference_grid / write_error_grid: "x1,x2,value" CSV grids
"""

import logging
from pathlib import Path
from typing import Callable, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.polynomial.hermite import hermgauss
from scipy.interpolate import RegularGridInterpolator

from sgpde.errors import IngestionError, InvalidArgumentError, NumericalFailureError
from sgpde.solver.collocation import Domain

logger = logging.getLogger(__name__)

HERMITE_NODES = 100
GRID_HEADERS = (("x1", "x2", "value"), ("t", "x", "value"))

PointFunction = Callable[[np.ndarray], np.ndarray]


def cole_hopf_burgers(
    t: Union[float, np.ndarray],
    x: Union[float, np.ndarray],
    nu: float,
    nodes: int = HERMITE_NODES,
) -> Union[float, np.ndarray]:
    """
    Viscous Burgers solution with u(0, x) = -sin(pi x).

    u = -int sin(pi (x - s)) G ds / int G ds with
    G = exp(-cos(pi (x - s)) / (2 pi nu)) exp(-s^2 / (4 nu t)); the heat-kernel
    weight is absorbed by Gauss-Hermite nodes after s = 2 sqrt(nu t) y.

    Args:
        t: Time(s) in [0, 1]
        x: Position(s) in [-1, 1]
        nu: Viscosity (> 0)
        nodes: Number of Gauss-Hermite nodes

    Returns:
        u with the broadcast shape of t and x (a float for scalar inputs)

    Raises:
        InvalidArgumentError: If nu <= 0 or t < 0
        NumericalFailureError: If the quadrature denominator degenerates
    """
    if not nu > 0.0:
        raise InvalidArgumentError(f"viscosity must be positive, got {nu}")
    t_arr, x_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    if np.any(t_arr < 0.0):
        raise InvalidArgumentError("time must be non-negative")
    scalar = t_arr.ndim == 0
    t_flat = t_arr.reshape(-1)
    x_flat = x_arr.reshape(-1)

    result = -np.sin(np.pi * x_flat)
    active = t_flat > 0.0
    if np.any(active):
        y, weights = hermgauss(nodes)
        shift = 2.0 * np.sqrt(nu * t_flat[active])[:, None] * y[None, :]
        phase = np.pi * (x_flat[active][:, None] - shift)
        exponent = -np.cos(phase) / (2.0 * np.pi * nu)
        # shift by the row maximum so exp stays in range
        exponent -= exponent.max(axis=1, keepdims=True)
        kernel = weights[None, :] * np.exp(exponent)
        denominator = kernel.sum(axis=1)
        if not np.all(np.isfinite(denominator)) or np.any(denominator <= 0.0):
            raise NumericalFailureError("Cole-Hopf quadrature denominator degenerated")
        result[active] = -(kernel * np.sin(phase)).sum(axis=1) / denominator

    if scalar:
        return float(result[0])
    return result.reshape(t_arr.shape)


def evaluation_grid(domain: Domain, resolution: int) -> Tuple[Tuple[np.ndarray, ...], np.ndarray]:
    """
    Equally spaced grid over the domain, endpoints included.

    Periodic axes drop the duplicate wrap point.

    Returns:
        (per-axis coordinates, (resolution^d, d) points in row-major order)
    """
    if resolution < 2:
        raise InvalidArgumentError(f"grid resolution must be at least 2, got {resolution}")
    axes = tuple(
        np.linspace(low, high, resolution, endpoint=axis not in domain.periodic_axes)
        for axis, (low, high) in enumerate(domain.bounds)
    )
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return axes, points


def linf_on_grid(
    model_eval: PointFunction,
    reference: PointFunction,
    domain: Domain,
    resolution: int = 60,
) -> Tuple[float, np.ndarray]:
    """
    Sup-norm error between two functions on the evaluation grid.

    Both callables take an (n, d) array of points and return n values.

    Returns:
        (max error, (resolution, ..., resolution) array of pointwise errors)
    """
    _, points = evaluation_grid(domain, resolution)
    errors = np.abs(np.asarray(model_eval(points)) - np.asarray(reference(points)))
    grid = errors.reshape((resolution,) * domain.dim)
    return float(errors.max()), grid


def write_error_grid(
    path: Union[str, Path],
    domain: Domain,
    values: np.ndarray,
    axis_names: Sequence[str] = ("x1", "x2"),
) -> Path:
    """Write a grid of values as "<axis1>,<axis2>,value" CSV, row-major in the first axis."""
    resolution = values.shape[0]
    _, points = evaluation_grid(domain, resolution)
    frame = pd.DataFrame(points, columns=list(axis_names))
    frame["value"] = values.reshape(-1)
    path = Path(path)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote grid of {len(frame)} cells to {path}")
    return path


class ReferenceGrid:
    """Bilinear interpolant of a lattice of reference values; linear outside the lattice."""

    def __init__(
        self,
        axes: Tuple[np.ndarray, np.ndarray],
        values: np.ndarray,
        axis_names: Tuple[str, str] = ("x1", "x2"),
    ):
        self.axes = axes
        self.values = values
        self.axis_names = axis_names
        self._interpolator = RegularGridInterpolator(
            axes, values, method="linear", bounds_error=False, fill_value=None
        )

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self._interpolator(pts))


def ingest_reference_grid(path: Union[str, Path]) -> ReferenceGrid:
    """
    Load a reference lattice from CSV.

    The file has header "x1,x2,value" (or "t,x,value") and one row per lattice
    node, row-major in the first coordinate.

    Raises:
        IngestionError: On an unreadable file, a bad header, a malformed row or a
            missing lattice point; the message names the first offending row
            (1-based, header excluded)
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionError(f"cannot read reference grid {path}: {e}") from e

    header = tuple(c.strip() for c in frame.columns)
    if header not in GRID_HEADERS:
        raise IngestionError(f"expected header x1,x2,value or t,x,value, got {','.join(header)}")
    if frame.empty:
        raise IngestionError("reference grid has no rows")

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        row = int(np.argmax(bad))
        raise IngestionError(f"malformed values {list(frame.iloc[row])}", row=row + 1)

    data = numeric.to_numpy(dtype=float)
    first = np.unique(data[:, 0])
    second = np.unique(data[:, 1])
    if first.size < 2 or second.size < 2:
        raise IngestionError("reference grid needs at least two nodes per axis")

    expected = np.stack(np.meshgrid(first, second, indexing="ij"), axis=-1).reshape(-1, 2)
    for k in range(min(len(data), len(expected))):
        if not np.array_equal(data[k, :2], expected[k]):
            raise IngestionError(
                f"expected lattice point ({expected[k][0]:g}, {expected[k][1]:g}), "
                f"got ({data[k, 0]:g}, {data[k, 1]:g})",
                row=k + 1,
            )
    if len(data) != len(expected):
        k = min(len(data), len(expected))
        raise IngestionError(
            f"lattice has {len(data)} rows, expected {len(expected)}", row=k + 1
        )

    logger.info(f"Ingested {first.size}x{second.size} reference grid from {path}")
    return ReferenceGrid(
        axes=(first, second),
        values=data[:, 2].reshape(first.size, second.size),
        axis_names=(header[0], header[1]),
    )

