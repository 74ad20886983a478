"""Rate matrices and rate families r -> Gamma(r)"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from core.errors import InvalidInput, InvalidParameters
from core.simplex import PointLike, as_array, random_interior
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.core.rates")

ROW_SUM_TOLERANCE = 1e-12
STATIONARY_SPOT_CHECKS = 25
STATIONARY_TOLERANCE = 1e-10


def validate_rate_matrix(gamma: np.ndarray) -> np.ndarray:
    """Check the rate-matrix invariants and return the matrix as a float array"""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise InvalidInput(f"Rate matrix must be square, got shape {gamma.shape}")
    if not np.all(np.isfinite(gamma)):
        raise InvalidInput("Rate matrix has non-finite entries")
    off_diagonal = gamma[~np.eye(gamma.shape[0], dtype=bool)]
    if off_diagonal.size and off_diagonal.min() < 0:
        raise InvalidInput(f"Rate matrix has negative off-diagonal entry {off_diagonal.min():.3e}")
    scale = max(1.0, float(np.abs(gamma).max()))
    row_sums = np.abs(gamma.sum(axis=1)).max()
    if row_sums > ROW_SUM_TOLERANCE * scale:
        raise InvalidInput(f"Rate matrix rows sum to {row_sums:.3e}, expected 0")
    return gamma


def with_diagonal(off_diagonal: np.ndarray) -> np.ndarray:
    """Complete an off-diagonal rate array with the diagonal that zeroes the row sums"""
    gamma = np.array(off_diagonal, dtype=float)
    np.fill_diagonal(gamma, 0.0)
    np.fill_diagonal(gamma, -gamma.sum(axis=1))
    return gamma


def check_irreducible(gamma: np.ndarray) -> bool:
    """True iff the graph of positive off-diagonal rates is strongly connected"""
    gamma = np.asarray(gamma, dtype=float)
    adjacency = (gamma > 0) & ~np.eye(gamma.shape[0], dtype=bool)
    count, _ = connected_components(adjacency.astype(np.int8), directed=True, connection="strong")
    return count == 1


def is_reversible(gamma: np.ndarray, pi: np.ndarray, tolerance: float = 1e-10) -> bool:
    flux = pi[:, None] * gamma
    return bool(np.abs(flux - flux.T).max() <= tolerance)


@dataclass(frozen=True)
class Potential:
    """Scalar field U on the simplex with its full-space gradient"""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    label: str = "U"


@dataclass(frozen=True)
class RateFamily:
    """A model: the map r -> Gamma(r) with optional analytic stationary law and potential

    When locally_gibbs is true the potential satisfies
    pi(r)_y / pi(r)_x = exp(-D_{e_y - e_x} U(r)). When it is false but a potential
    is present, J = entropy + U still solves the stationary equation.
    """

    spec: Any
    dimension: int
    rates: Callable[[np.ndarray], np.ndarray]
    label: str
    stationary: Optional[Callable[[np.ndarray], np.ndarray]] = None
    potential: Optional[Potential] = None
    locally_gibbs: bool = False
    free_energy_fields: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __call__(self, r: PointLike) -> np.ndarray:
        return self.rates(as_array(r))

    @property
    def has_stationary(self) -> bool:
        return self.stationary is not None

    @property
    def has_potential(self) -> bool:
        return self.potential is not None


def evaluate_rates(model: RateFamily, r: PointLike) -> np.ndarray:
    """Gamma(r) with the rate-matrix invariants verified"""
    point = as_array(r)
    if point.size != model.dimension:
        raise InvalidInput(f"Point has dimension {point.size}, model {model.label} has {model.dimension}")
    return validate_rate_matrix(model.rates(point))


def spot_check_stationary(model: RateFamily, checks: int = STATIONARY_SPOT_CHECKS, seed: int = 0) -> None:
    """Verify pi(r) Gamma(r) = 0 at random points; raises InvalidParameters otherwise"""
    if model.stationary is None:
        return
    rng = stream(seed, 0)
    for _ in range(checks):
        r = random_interior(model.dimension, rng)
        try:
            gamma = evaluate_rates(model, r)
        except InvalidInput as e:
            raise InvalidParameters(f"{model.label} produces an invalid rate matrix at {r}: {e}") from e
        pi = model.stationary(r)
        residual = float(np.abs(pi @ gamma).sum())
        scale = max(1.0, float(np.abs(gamma).max()))
        if residual > STATIONARY_TOLERANCE * scale:
            raise InvalidParameters(
                f"Stationary law of {model.label} fails balance at {r}: residual {residual:.3e}"
            )


def lipschitz_estimate(model: RateFamily, samples: int = 200, seed: int = 0) -> float:
    """Sampled lower bound on the Lipschitz constant of r -> Gamma(r)

    Ratio of entrywise l1 rate differences to l1 point distances over
    consecutive pairs of random points.
    """
    if samples < 2:
        raise InvalidParameters(f"Lipschitz estimate needs at least 2 samples, got {samples}")
    rng = stream(seed, 1)
    points = [random_interior(model.dimension, rng) for _ in range(samples)]
    matrices = [model.rates(p) for p in points]
    best = 0.0
    for i in range(samples):
        for j in range(i + 1, min(samples, i + 8)):
            distance = np.abs(points[i] - points[j]).sum()
            if distance < 1e-12:
                continue
            best = max(best, float(np.abs(matrices[i] - matrices[j]).sum() / distance))
    logger.debug(f"Lipschitz estimate for {model.label}: {best:.6g} from {samples} samples")
    return best
