"""Forward equation dp/dt = p Gamma(p), fixed points and frozen stationary laws"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import optimize

from core.errors import InvalidParameters, NoConvergence, NotIrreducible, SolverSingular, StepTooLarge
from core.rates import RateFamily, check_irreducible, validate_rate_matrix
from core.reports import FixedPointClass, FixedPointReport
from core.simplex import PointLike, SimplexPoint, as_array, as_point, helmert_basis, random_interior
from tools.parallel import parallel_map
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.core.dynamics")

FIXED_POINT_TOLERANCE = 1e-10
PICARD_TOLERANCE = 1e-12
PICARD_DAMPING = 0.5
PICARD_MAX_ITERATIONS = 100_000
DEDUP_DISTANCE = 1e-6
CLASSIFY_THRESHOLD = 1e-8
JACOBIAN_STEP = 1e-6


def stationary_distribution(gamma: np.ndarray) -> np.ndarray:
    """Stationary law of an irreducible rate matrix by the augmented dense solve"""
    gamma = validate_rate_matrix(gamma)
    if not check_irreducible(gamma):
        raise NotIrreducible("Rate matrix is not irreducible")
    d = gamma.shape[0]
    system = gamma.T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(d)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as e:
        raise SolverSingular(f"Stationary solve failed: {e}") from e
    scale = max(1.0, float(np.abs(gamma).max()))
    if not np.all(np.isfinite(pi)) or pi.min() < -1e-12 * scale:
        raise SolverSingular(f"Stationary solve returned an invalid vector {pi}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ gamma).sum())
    if residual > 1e-12 * scale * d:
        raise SolverSingular(f"Stationary residual {residual:.3e} exceeds tolerance")
    return pi


def stationary_distribution_power(gamma: np.ndarray, tolerance: float = 1e-14,
                                  max_iterations: int = 1_000_000) -> np.ndarray:
    """Stationary law by power iteration on the uniformized kernel I + Gamma / q"""
    gamma = validate_rate_matrix(gamma)
    if not check_irreducible(gamma):
        raise NotIrreducible("Rate matrix is not irreducible")
    d = gamma.shape[0]
    kernel = np.eye(d) + gamma / (1.05 * np.abs(np.diag(gamma)).max())
    pi = np.full(d, 1.0 / d)
    for _ in range(max_iterations):
        updated = pi @ kernel
        updated /= updated.sum()
        if np.abs(updated - pi).sum() < tolerance:
            return updated
        pi = updated
    raise NoConvergence(f"Power iteration did not converge in {max_iterations} steps")


def frozen_stationary(model: RateFamily, r: np.ndarray) -> np.ndarray:
    """pi(r): the analytic law when the model has one, the dense solve otherwise"""
    if model.stationary is not None:
        return model.stationary(r)
    return stationary_distribution(model.rates(r))


def vector_field(model: RateFamily, r: PointLike) -> np.ndarray:
    """r Gamma(r), a zero-sum vector"""
    point = as_array(r)
    return point @ model.rates(point)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    model_label: str

    def __len__(self) -> int:
        return self.times.size

    @property
    def points(self) -> List[SimplexPoint]:
        return [SimplexPoint(s) for s in self.states]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def rows(self) -> np.ndarray:
        """Table t, p_1..p_d"""
        return np.column_stack([self.times, self.states])


def _renormalize(p: np.ndarray, t: float) -> np.ndarray:
    low = p.min()
    if low < -1e-9:
        raise StepTooLarge(f"Coordinate {low:.3e} < -1e-9 at t={t:.6g}; reduce dt")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def integrate_ode(model: RateFamily, p0: PointLike, t_end: float, dt: float,
                  renormalize: bool = True) -> Trajectory:
    """Classical RK4 at fixed step dt; the last step is shortened to land on t_end"""
    if dt <= 0:
        raise InvalidParameters(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise InvalidParameters(f"t_end must be nonnegative, got {t_end}")
    p = as_point(p0).weights.copy()
    steps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, p.size))
    times[0], states[0] = 0.0, p
    t = 0.0

    def field(x):
        return x @ model.rates(x)

    for k in range(1, steps + 1):
        h = min(dt, t_end - t) if k == steps else dt
        k1 = field(p)
        k2 = field(p + 0.5 * h * k1)
        k3 = field(p + 0.5 * h * k2)
        k4 = field(p + h * k3)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = k * dt if k < steps else t_end
        if renormalize:
            p = _renormalize(p, t)
        times[k], states[k] = t, p
    logger.debug(f"Integrated {model.label} over [0, {t_end}] in {steps} steps")
    return Trajectory(times=times, states=states, model_label=model.label)


def _picard(model: RateFamily, start: np.ndarray) -> Optional[np.ndarray]:
    p = start.copy()
    for _ in range(PICARD_MAX_ITERATIONS):
        target = frozen_stationary(model, p)
        if np.abs(p - target).sum() <= PICARD_TOLERANCE:
            return target
        p = (1.0 - PICARD_DAMPING) * p + PICARD_DAMPING * target
    return None


def _reduced_residual(model: RateFamily):
    def residual(z: np.ndarray) -> np.ndarray:
        p = np.append(z, 1.0 - z.sum())
        if p.min() <= 0:
            return np.full(z.size, 1e3)
        return (p - frozen_stationary(model, p))[:-1]
    return residual


def _root_solve(model: RateFamily, start: np.ndarray) -> Optional[np.ndarray]:
    solution = optimize.root(_reduced_residual(model), start[:-1], method="hybr", tol=1e-14)
    p = np.append(solution.x, 1.0 - solution.x.sum())
    if p.min() <= 0:
        return None
    if np.abs(p - frozen_stationary(model, p)).sum() > 1e-10:
        return None
    return p


def _search_start(model: RateFamily, start: np.ndarray) -> Optional[np.ndarray]:
    point = _picard(model, start)
    if point is None:
        point = _root_solve(model, start)
    return point


def fixed_point_residual(model: RateFamily, p: np.ndarray) -> float:
    return float(np.abs(vector_field(model, p)).sum())


def _polish(model: RateFamily, p: np.ndarray) -> np.ndarray:
    polished = _root_solve(model, p)
    if polished is not None and fixed_point_residual(model, polished) < fixed_point_residual(model, p):
        return polished
    return p


def tangent_jacobian(model: RateFamily, p: np.ndarray, step: float = JACOBIAN_STEP) -> np.ndarray:
    """Jacobian of the vector field restricted to the tangent hyperplane, in the Helmert basis"""
    basis = helmert_basis(p.size)
    columns = []
    for direction in basis:
        forward = vector_field(model, p + step * direction)
        backward = vector_field(model, p - step * direction)
        columns.append(basis @ ((forward - backward) / (2 * step)))
    return np.column_stack(columns)


def classify(spectrum: np.ndarray) -> FixedPointClass:
    real = np.real(spectrum)
    if np.all(real < -CLASSIFY_THRESHOLD):
        return FixedPointClass.STABLE
    if np.any(real > CLASSIFY_THRESHOLD):
        return FixedPointClass.UNSTABLE
    return FixedPointClass.INCONCLUSIVE


def _starts(d: int, multistarts: int, seed: int) -> List[np.ndarray]:
    starts = [np.full(d, 1.0 / d)]
    for i in range(d):
        near_vertex = np.full(d, 0.1 / (d - 1))
        near_vertex[i] = 0.9
        starts.append(near_vertex)
    rng = stream(seed, 0)
    starts.extend(random_interior(d, rng, margin=1e-3) for _ in range(multistarts))
    return starts


def find_fixed_points(model: RateFamily, multistarts: int = 20, seed: int = 0,
                      jobs: Optional[int] = 1) -> List[FixedPointReport]:
    """Multistart damped Picard search for p = pi(p), deduplicated, polished and classified"""
    if multistarts < 1:
        raise InvalidParameters(f"multistarts must be at least 1, got {multistarts}")
    starts = _starts(model.dimension, multistarts, seed)
    results = parallel_map(lambda s: _search_start(model, s), starts, jobs)

    survivors: List[np.ndarray] = []
    for index, point in enumerate(results):
        if point is None:
            logger.warning(f"Fixed-point search from start {index} did not converge")
            continue
        if all(np.abs(point - other).sum() > DEDUP_DISTANCE for other in survivors):
            survivors.append(point)

    reports = []
    for point in survivors:
        point = _polish(model, point)
        residual = fixed_point_residual(model, point)
        if residual > FIXED_POINT_TOLERANCE:
            logger.warning(f"Discarding candidate {point} with residual {residual:.3e}")
            continue
        spectrum = np.linalg.eigvals(tangent_jacobian(model, point))
        reports.append(FixedPointReport(
            point=SimplexPoint(point),
            residual=residual,
            classification=classify(spectrum),
            jacobian_spectrum=sorted(spectrum.tolist(), key=lambda z: (z.real, z.imag)),
        ))
    reports.sort(key=lambda report: tuple(-report.point.weights))
    logger.info(f"{model.label}: {len(reports)} fixed point(s) from {len(starts)} starts")
    return reports
