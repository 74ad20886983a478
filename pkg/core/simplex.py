"""Geometry of the probability simplex and its tangent hyperplane"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Sequence, Union

import numpy as np

from core.errors import BoundaryProximity, InvalidInput, InvalidParameters

logger = logging.getLogger("lyapunov_toolkit.core.simplex")

SUM_TOLERANCE = 1e-12
CLAMP_TOLERANCE = 1e-12
DEFAULT_STEP = 1e-5
DEFAULT_MARGIN = 0.02


def _finite_vector(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    if array.size == 0:
        raise InvalidInput(f"{name} must not be empty")
    if not np.all(np.isfinite(array)):
        raise InvalidInput(f"{name} has non-finite components: {array}")
    return array


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """Probability vector on the states 1..d

    Negatives in [-1e-12, 0) are clamped to zero and the vector is
    renormalized; anything further off the simplex is rejected.
    """

    weights: np.ndarray

    def __post_init__(self):
        weights = _finite_vector(self.weights, "SimplexPoint")
        if weights.min() < -CLAMP_TOLERANCE:
            raise InvalidInput(f"SimplexPoint has negative mass {weights.min():.3e}")
        total = weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise InvalidInput(f"SimplexPoint mass sums to {total!r}, expected 1")
        weights = np.clip(weights, 0.0, None)
        weights = weights / weights.sum()
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.weights.size

    @property
    def min_coordinate(self) -> float:
        return float(self.weights.min())

    def is_interior(self, margin: float = 0.0) -> bool:
        return self.min_coordinate > margin

    def distance(self, other: "PointLike") -> float:
        """l1 distance to another point"""
        return float(np.abs(self.weights - as_array(other)).sum())

    def to_list(self) -> List[float]:
        return [float(x) for x in self.weights]

    @classmethod
    def barycenter(cls, d: int) -> "SimplexPoint":
        return cls(np.full(d, 1.0 / d))

    @classmethod
    def vertex(cls, d: int, index: int) -> "SimplexPoint":
        weights = np.zeros(d)
        weights[index] = 1.0
        return cls(weights)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Vector in the hyperplane of zero-sum directions"""

    components: np.ndarray

    def __post_init__(self):
        components = _finite_vector(self.components, "TangentVector")
        scale = max(1.0, float(np.abs(components).max()))
        if abs(components.sum()) > SUM_TOLERANCE * scale * components.size:
            raise InvalidInput(
                f"TangentVector components sum to {components.sum():.3e}, expected 0"
            )
        components = components.copy()
        components.setflags(write=False)
        object.__setattr__(self, "components", components)

    @property
    def dimension(self) -> int:
        return self.components.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def to_list(self) -> List[float]:
        return [float(x) for x in self.components]


@dataclass(frozen=True, eq=False)
class SimplexGrid:
    points: List[SimplexPoint]
    resolution: int
    margin: float
    dimension: int = field(default=0)

    def __post_init__(self):
        if not self.points:
            raise InvalidParameters("SimplexGrid has no points")
        if self.dimension == 0:
            object.__setattr__(self, "dimension", self.points[0].dimension)
        for point in self.points:
            if point.min_coordinate < self.margin - 1e-12:
                raise InvalidInput(f"Grid point {point.to_list()} violates margin {self.margin}")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[SimplexPoint]:
        return iter(self.points)

    def as_array(self) -> np.ndarray:
        return np.vstack([p.weights for p in self.points])


PointLike = Union[SimplexPoint, Sequence[float], np.ndarray]
VectorLike = Union[TangentVector, Sequence[float], np.ndarray]


def as_array(point) -> np.ndarray:
    """Plain float array view of a point, tangent vector or sequence"""
    if isinstance(point, SimplexPoint):
        return point.weights
    if isinstance(point, TangentVector):
        return point.components
    return np.asarray(point, dtype=float)


def as_point(point: PointLike) -> SimplexPoint:
    if isinstance(point, SimplexPoint):
        return point
    return SimplexPoint(np.asarray(point, dtype=float))


def tangent_project(v: VectorLike) -> TangentVector:
    """Orthogonal projection onto the zero-sum hyperplane"""
    array = _finite_vector(as_array(v), "vector")
    return TangentVector(array - array.mean())


def project_array(v: np.ndarray) -> np.ndarray:
    """Unchecked projection used on hot paths"""
    return v - v.mean()


def helmert_basis(d: int) -> np.ndarray:
    """Orthonormal basis of the zero-sum hyperplane, one vector per row

    Row k (0-based) is (1, ..., 1, -(k+1), 0, ..., 0) / sqrt((k+1)(k+2)).
    """
    if d < 2:
        raise InvalidParameters(f"Dimension must be at least 2, got {d}")
    basis = np.zeros((d - 1, d))
    for k in range(1, d):
        basis[k - 1, :k] = 1.0
        basis[k - 1, k] = -k
        basis[k - 1] /= np.sqrt(k * (k + 1))
    return basis


def default_step(r: np.ndarray) -> float:
    return DEFAULT_STEP * max(1.0, float(np.abs(r).max()))


def tangent_gradient(
    f: Callable[[np.ndarray], float], r: PointLike, h: float = None
) -> TangentVector:
    """Central-difference gradient of f along the tangent hyperplane"""
    point = as_array(r)
    step = default_step(point) if h is None else float(h)
    if step <= 0:
        raise InvalidParameters(f"Finite-difference step must be positive, got {step}")
    if point.min() < 2 * step:
        raise BoundaryProximity(
            f"Point with min coordinate {point.min():.3e} is closer than 2h={2 * step:.1e} to the boundary"
        )
    return TangentVector(project_array(_helmert_difference(f, point, step)))


def _helmert_difference(f, point: np.ndarray, step: float) -> np.ndarray:
    basis = helmert_basis(point.size)
    gradient = np.zeros(point.size)
    for direction in basis:
        slope = (f(point + step * direction) - f(point - step * direction)) / (2 * step)
        gradient += slope * direction
    return gradient


def fd_gradient_array(f: Callable[[np.ndarray], float], point: np.ndarray, h: float = None) -> np.ndarray:
    """Array form of tangent_gradient without value-type wrapping"""
    step = default_step(point) if h is None else h
    if point.min() < 2 * step:
        raise BoundaryProximity(f"Point with min coordinate {point.min():.3e} is too close to the boundary")
    return project_array(_helmert_difference(f, point, step))


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    """Non-negative integer vectors of given length summing to total, lexicographic"""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def lattice_counts(total: int, d: int) -> np.ndarray:
    """All count vectors of length d summing to total, lexicographic order"""
    return np.array(list(_compositions(total, d)), dtype=np.int64).reshape(-1, d)


def interior_grid(d: int, resolution: int, margin: float = DEFAULT_MARGIN) -> SimplexGrid:
    """Lattice points k/resolution of the simplex with every coordinate at least margin"""
    if d < 2:
        raise InvalidParameters(f"Dimension must be at least 2, got {d}")
    if resolution < 1:
        raise InvalidParameters(f"Resolution must be positive, got {resolution}")
    if margin < 0 or margin * d >= 1:
        raise InvalidParameters(f"Margin {margin} is incompatible with dimension {d}")
    lowest = int(np.ceil(margin * resolution - 1e-9))
    points = [
        SimplexPoint(np.array(counts, dtype=float) / resolution)
        for counts in _compositions(resolution, d)
        if min(counts) >= lowest
    ]
    if not points:
        raise InvalidParameters(f"No lattice point of resolution {resolution} has margin {margin}")
    return SimplexGrid(points=points, resolution=resolution, margin=margin, dimension=d)


def grid_with_at_least(d: int, count: int, margin: float = DEFAULT_MARGIN) -> SimplexGrid:
    """Smallest-resolution interior grid holding at least count points"""
    for resolution in itertools.count(1):
        lowest = int(np.ceil(margin * resolution - 1e-9))
        if resolution - d * lowest < 0:
            continue
        grid = interior_grid(d, resolution, margin)
        if len(grid) >= count:
            logger.debug(f"Grid d={d} resolution={resolution} has {len(grid)} points")
            return grid
        if resolution > 10_000:
            raise InvalidParameters(f"Cannot build a {count}-point grid in dimension {d}")


def random_interior(d: int, rng: np.random.Generator, margin: float = 0.0, concentration: float = 1.0) -> np.ndarray:
    """Dirichlet sample pushed into {min coordinate >= margin}"""
    if margin * d >= 1:
        raise InvalidParameters(f"Margin {margin} is incompatible with dimension {d}")
    sample = rng.dirichlet(np.full(d, concentration))
    return margin + (1.0 - d * margin) * sample


def random_tangent(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return project_array(scale * rng.standard_normal(d))
