"""
Collocation points, inducing subsets and ordered functional vectors.

Random streams are split by purpose so that changing the inducing count never
changes the sample set: every stream is a PCG64 generator seeded with
SeedSequence([seed, purpose]).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from sgpde.errors import InvalidArgumentError, InvalidConfigurationError
from sgpde.solver.kernel_core import DiffOp, Functional

logger = logging.getLogger(__name__)

STREAM_INTERIOR = 0
STREAM_BOUNDARY = 1
STREAM_INDUCING = 2
STREAM_INIT = 3

BOUNDARY = "boundary"
INTERIOR = "interior"
ALL = "all"


def make_rng(seed: int, purpose: int) -> np.random.Generator:
    """Platform-stable generator for one purpose stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), purpose])))


@dataclass(frozen=True)
class Face:
    """One face {x_axis = value} of a box domain."""
    axis: int
    side: int  # 0 = low, 1 = high
    measure: float


@dataclass(frozen=True)
class Domain:
    """
    Axis-aligned box with optional periodic axes and an optional time axis.

    Faces of periodic axes are never boundary. On the time axis only the low
    face (initial time) is boundary.
    """
    bounds: Tuple[Tuple[float, float], ...]
    periodic_axes: FrozenSet[int] = frozenset()
    time_axis: Optional[int] = None

    def __post_init__(self) -> None:
        for axis, (low, high) in enumerate(self.bounds):
            if not low < high:
                raise InvalidArgumentError(f"axis {axis}: low {low} must be < high {high}")
        for axis in self.periodic_axes:
            if not 0 <= axis < self.dim:
                raise InvalidArgumentError(f"periodic axis {axis} out of range")
        if self.time_axis is not None:
            if not 0 <= self.time_axis < self.dim or self.time_axis in self.periodic_axes:
                raise InvalidArgumentError(f"invalid time axis {self.time_axis}")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lows(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def highs(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def is_periodic(self) -> bool:
        return len(self.periodic_axes) == self.dim

    @property
    def boundary_faces(self) -> List[Face]:
        """Faces counted as the boundary, each with its (d-1)-dimensional measure."""
        faces = []
        spans = self.highs - self.lows
        for axis in range(self.dim):
            if axis in self.periodic_axes:
                continue
            measure = float(np.prod(np.delete(spans, axis))) if self.dim > 1 else 1.0
            sides = (0,) if axis == self.time_axis else (0, 1)
            faces.extend(Face(axis, side, measure) for side in sides)
        return faces

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lows - tol) & (pts <= self.highs + tol), axis=1)


@dataclass(frozen=True)
class SampleSet:
    """Interior and boundary collocation points."""
    interior: np.ndarray
    boundary: np.ndarray
    seed: int

    @property
    def n_interior(self) -> int:
        return int(self.interior.shape[0])

    @property
    def n_boundary(self) -> int:
        return int(self.boundary.shape[0])

    @property
    def n_total(self) -> int:
        return self.n_interior + self.n_boundary

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "interior": self.interior.tolist(),
            "boundary": self.boundary.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SampleSet":
        interior = np.asarray(data["interior"], dtype=float)
        boundary = np.asarray(data["boundary"], dtype=float)
        dim = interior.shape[1] if interior.size else (boundary.shape[1] if boundary.size else 0)
        return cls(
            interior=interior.reshape(-1, dim),
            boundary=boundary.reshape(-1, dim),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class InducingSet:
    """Indices of the inducing points within each stratum of a SampleSet."""
    interior_indices: np.ndarray
    boundary_indices: np.ndarray

    @property
    def m_total(self) -> int:
        return int(self.interior_indices.size + self.boundary_indices.size)

    def subset(self, samples: SampleSet) -> SampleSet:
        """The inducing points as a SampleSet of their own."""
        return SampleSet(
            interior=samples.interior[self.interior_indices],
            boundary=samples.boundary[self.boundary_indices],
            seed=samples.seed,
        )

    def to_dict(self) -> Dict:
        return {
            "interior_indices": self.interior_indices.tolist(),
            "boundary_indices": self.boundary_indices.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "InducingSet":
        return cls(
            interior_indices=np.asarray(data["interior_indices"], dtype=int),
            boundary_indices=np.asarray(data["boundary_indices"], dtype=int),
        )


@dataclass(frozen=True)
class OperatorSlot:
    """One entry of a functional layout: an operator applied on one stratum."""
    label: str
    op: DiffOp
    where: str  # BOUNDARY, INTERIOR or ALL


@dataclass(frozen=True)
class Block:
    """A contiguous run of functionals sharing one operator."""
    label: str
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass
class FunctionalVector:
    """
    Ordered functionals stored as a point array plus an operator index per entry.

    Every block is one operator over one point list, so kernel blocks can be
    evaluated block-by-block with vectorized calls.
    """
    points: np.ndarray
    op_index: np.ndarray
    ops: List[DiffOp]
    block_layout: List[Block] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def entries(self) -> List[Functional]:
        return [
            Functional(tuple(float(v) for v in self.points[i]), self.ops[self.op_index[i]])
            for i in range(len(self))
        ]

    def block_points(self, block: Block) -> np.ndarray:
        return self.points[block.start:block.stop]

    def block_op(self, block: Block) -> DiffOp:
        return self.ops[int(self.op_index[block.start])]

    def block_by_label(self, label: str) -> Block:
        for block in self.block_layout:
            if block.label == label:
                return block
        raise KeyError(label)

    def to_records(self) -> List[Dict]:
        """JSON-ready (point, op) records."""
        return [
            {
                "point": self.points[i].tolist(),
                "op": [[list(index), coeff] for index, coeff in self.ops[self.op_index[i]].terms],
                "label": self.ops[self.op_index[i]].label,
            }
            for i in range(len(self))
        ]

    @classmethod
    def from_records(cls, records: Sequence[Dict]) -> "FunctionalVector":
        ops: List[DiffOp] = []
        op_index = []
        points = []
        blocks: List[Block] = []
        for i, record in enumerate(records):
            op = DiffOp(
                terms=tuple((tuple(int(v) for v in index), float(c)) for index, c in record["op"]),
                label=record.get("label", ""),
            )
            if op not in ops:
                ops.append(op)
            idx = ops.index(op)
            if not blocks or op_index[-1] != idx:
                blocks.append(Block(op.label, i, 0))
            last = blocks[-1]
            blocks[-1] = Block(last.label, last.start, last.length + 1)
            op_index.append(idx)
            points.append(record["point"])
        return cls(
            points=np.asarray(points, dtype=float).reshape(len(records), -1),
            op_index=np.asarray(op_index, dtype=int),
            ops=ops,
            block_layout=blocks,
        )


# Operations ---------------------------------------------------------------------


def sample_collocation(
    domain: Domain, n_total: int, interior_ratio: float, seed: int
) -> SampleSet:
    """
    Draw N collocation points split into interior and boundary strata.

    Interior points are uniform in the box. Boundary points pick a face with
    probability proportional to its measure, then a uniform point on that face.
    Periodic domains have no boundary and every point is interior.

    Args:
        domain: Box domain
        n_total: Total number of points N (>= 4)
        interior_ratio: Fraction of interior points; ignored on periodic domains
        seed: Integer seed

    Returns:
        SampleSet

    Raises:
        InvalidConfigurationError: On bad counts or a ratio leaving no boundary points
    """
    if n_total < 4:
        raise InvalidConfigurationError(f"need at least 4 collocation points, got {n_total}")

    faces = domain.boundary_faces
    if not faces:
        n_interior = n_total
    else:
        if not 0.0 < interior_ratio <= 1.0:
            raise InvalidConfigurationError(f"interior_ratio {interior_ratio} not in (0, 1)")
        n_interior = int(round(interior_ratio * n_total))
        if n_interior >= n_total:
            raise InvalidConfigurationError(
                f"interior_ratio {interior_ratio} leaves no boundary points for N={n_total}"
            )
        if n_interior < 1:
            raise InvalidConfigurationError(f"interior_ratio {interior_ratio} gives no interior points")
    n_boundary = n_total - n_interior

    lows, highs = domain.lows, domain.highs
    rng = make_rng(seed, STREAM_INTERIOR)
    interior = rng.uniform(lows, highs, size=(n_interior, domain.dim))

    boundary = np.empty((n_boundary, domain.dim))
    if n_boundary:
        rng_b = make_rng(seed, STREAM_BOUNDARY)
        weights = np.array([f.measure for f in faces])
        choice = rng_b.choice(len(faces), size=n_boundary, p=weights / weights.sum())
        boundary = rng_b.uniform(lows, highs, size=(n_boundary, domain.dim))
        for k, face in enumerate(faces):
            rows = choice == k
            boundary[rows, face.axis] = highs[face.axis] if face.side else lows[face.axis]

    logger.info(
        f"Sampled {n_interior} interior and {n_boundary} boundary points (seed {seed})"
    )
    return SampleSet(interior=interior, boundary=boundary, seed=int(seed))


def select_inducing(
    samples: SampleSet, m_total: int, interior_ratio: float, seed: int
) -> InducingSet:
    """
    Pick M inducing points uniformly without replacement within each stratum.

    Indices are returned sorted, so M = N gives the identity selection.

    Raises:
        InvalidConfigurationError: If the requested counts exceed a stratum
    """
    if m_total < 1:
        raise InvalidConfigurationError(f"need at least one inducing point, got {m_total}")
    if samples.n_boundary == 0:
        m_interior = m_total
    else:
        m_interior = int(round(interior_ratio * m_total))
    m_boundary = m_total - m_interior
    if m_interior > samples.n_interior or m_boundary > samples.n_boundary or m_boundary < 0:
        raise InvalidConfigurationError(
            f"cannot pick {m_interior} interior / {m_boundary} boundary inducing points from "
            f"{samples.n_interior} / {samples.n_boundary} samples"
        )

    rng = make_rng(seed, STREAM_INDUCING)
    interior_idx = np.sort(rng.choice(samples.n_interior, size=m_interior, replace=False))
    boundary_idx = np.sort(rng.choice(samples.n_boundary, size=m_boundary, replace=False))
    logger.info(f"Selected {m_interior} interior and {m_boundary} boundary inducing points")
    return InducingSet(interior_indices=interior_idx, boundary_indices=boundary_idx)


def build_functionals(layout: Sequence[OperatorSlot], points: SampleSet) -> FunctionalVector:
    """
    Build the ordered functional vector for a layout.

    Boundary slots come first, then interior and all-point slots, each in the
    declared order and each in sample order. "all" slots use interior points
    followed by boundary points.

    Args:
        layout: Operator slots of the problem
        points: Sample set (or inducing subset)

    Returns:
        FunctionalVector with one block per slot
    """
    ordered = [s for s in layout if s.where == BOUNDARY] + [
        s for s in layout if s.where != BOUNDARY
    ]
    ops: List[DiffOp] = []
    point_chunks = []
    index_chunks = []
    blocks = []
    start = 0
    dim = points.interior.shape[1] if points.interior.size else points.boundary.shape[1]
    for slot in ordered:
        if slot.where == BOUNDARY:
            pts = points.boundary
        elif slot.where == INTERIOR:
            pts = points.interior
        elif slot.where == ALL:
            pts = np.vstack([points.interior, points.boundary])
        else:
            raise InvalidArgumentError(f"unknown stratum {slot.where!r}")
        if slot.op not in ops:
            ops.append(slot.op)
        point_chunks.append(pts.reshape(-1, dim))
        index_chunks.append(np.full(pts.shape[0], ops.index(slot.op), dtype=int))
        blocks.append(Block(slot.label, start, int(pts.shape[0])))
        start += int(pts.shape[0])

    return FunctionalVector(
        points=np.vstack(point_chunks) if point_chunks else np.empty((0, dim)),
        op_index=np.concatenate(index_chunks) if index_chunks else np.empty(0, dtype=int),
        ops=ops,
        block_layout=blocks,
    )
