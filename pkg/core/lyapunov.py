"""Candidate Lyapunov functions and the checks run against them"""

import logging
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from core.errors import (
    BoundaryProximity,
    GradientMismatch,
    InvalidParameters,
    NotFixedPoint,
    NotIrreducible,
    SupportViolation,
)
from core.dynamics import frozen_stationary
from core.rates import Potential, RateFamily, check_irreducible, lipschitz_estimate
from core.reports import (
    DescentReport,
    DescentSample,
    PositiveDefinitenessReport,
    PotentialTestReport,
    SlowAdaptationBoundReport,
)
from core.simplex import (
    PointLike,
    SimplexGrid,
    SimplexPoint,
    as_array,
    fd_gradient_array,
    helmert_basis,
    project_array,
    random_interior,
)
from tools.parallel import parallel_map
from tools.quadrature import integrate_1d
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.core.lyapunov")

BOUNDARY_FLOOR = 1e-12
DESCENT_MARGIN = 1e-12
GRADIENT_CHECK_POINTS = 25
GRADIENT_CHECK_TOLERANCE = 1e-6
CURL_THRESHOLD = 1e-4

Field = Callable[[np.ndarray], np.ndarray]


def _require_interior(r: np.ndarray, floor: float = BOUNDARY_FLOOR) -> None:
    if r.min() < floor:
        raise BoundaryProximity(f"Min coordinate {r.min():.3e} is below {floor:.0e}")


def _entropy(r: np.ndarray) -> float:
    return float(r @ np.log(r))


def relative_entropy(p: PointLike, q: PointLike) -> float:
    """R(p||q) = sum p_x log(p_x / q_x) with 0 log 0 = 0"""
    p, q = as_array(p), as_array(q)
    if np.any((p > 0) & (q <= 0)):
        raise SupportViolation("p charges a state where q has no mass")
    return float(max(rel_entr(p, q).sum(), 0.0))


def gibbs_free_energy(K: Field, r: PointLike) -> float:
    """F(r) = sum_x (K^x(r) + log r_x) r_x"""
    r = as_array(r)
    _require_interior(r)
    return float((np.asarray(K(r)) + np.log(r)) @ r)


def locally_gibbs_J(U, r: PointLike) -> float:
    """J(r) = sum_x r_x log r_x + U(r)"""
    r = as_array(r)
    _require_interior(r)
    value = U.value(r) if isinstance(U, Potential) else U(r)
    return _entropy(r) + float(value)


def ggibbs_potential(K: Field, R: Sequence[Callable[[float], float]], r: PointLike) -> float:
    """sum_z [int_0^{r_z} R(z, w) dw + K^z(r) r_z]"""
    r = as_array(r)
    integrals = sum(integrate_1d(f, 0.0, x) for f, x in zip(R, r))
    return float(integrals + np.asarray(K(r)) @ r)


class CandidateKind(Enum):
    RELATIVE_ENTROPY = "RelativeEntropy"
    GIBBS_FREE_ENERGY = "GibbsFreeEnergy"
    LOCALLY_GIBBS_J = "LocallyGibbsJ"
    CUSTOM = "Custom"


class LyapunovCandidate:
    """Scalar field on the open simplex with an analytic or finite-difference tangent gradient"""

    def __init__(self, kind: CandidateKind, value: Callable[[np.ndarray], float],
                 gradient: Optional[Field] = None, label: str = "",
                 dimension: Optional[int] = None, verify: bool = True, pi_star: Optional[np.ndarray] = None):
        self.kind = kind
        self._value = value
        self._gradient = gradient
        self.label = label or kind.value
        self.pi_star = pi_star
        self.force_fd = False
        if verify and gradient is not None and dimension is not None:
            self.verify_gradient(dimension)

    @property
    def has_analytic_gradient(self) -> bool:
        return self._gradient is not None and not self.force_fd

    def value(self, r: PointLike) -> float:
        return float(self._value(as_array(r)))

    def __call__(self, r: PointLike) -> float:
        return self.value(r)

    def gradient(self, r: PointLike) -> np.ndarray:
        """Tangent gradient D J(r) as a zero-sum array"""
        r = as_array(r)
        if self.has_analytic_gradient:
            return project_array(np.asarray(self._gradient(r), dtype=float))
        return fd_gradient_array(self._value, r)

    def fd_gradient(self, r: PointLike) -> np.ndarray:
        return fd_gradient_array(self._value, as_array(r))

    def with_fd_gradient(self) -> "LyapunovCandidate":
        """Same field with the finite-difference gradient forced"""
        clone = LyapunovCandidate(self.kind, self._value, self._gradient, self.label,
                                  verify=False, pi_star=self.pi_star)
        clone.force_fd = True
        return clone

    def verify_gradient(self, dimension: int, seed: int = 0) -> None:
        rng = stream(seed, 2)
        for _ in range(GRADIENT_CHECK_POINTS):
            r = random_interior(dimension, rng, margin=0.01)
            analytic = project_array(np.asarray(self._gradient(r), dtype=float))
            numeric = fd_gradient_array(self._value, r)
            gap = float(np.abs(analytic - numeric).max())
            if gap > GRADIENT_CHECK_TOLERANCE:
                raise GradientMismatch(f"{self.label}: analytic gradient off by {gap:.3e} at {r}")

    def __repr__(self) -> str:
        return f"LyapunovCandidate({self.label!r})"


def relative_entropy_candidate(pi_star: PointLike) -> LyapunovCandidate:
    pi = as_array(pi_star).copy()
    if pi.min() <= 0:
        raise InvalidParameters("Reference law must be interior")
    return LyapunovCandidate(
        CandidateKind.RELATIVE_ENTROPY,
        value=lambda r: relative_entropy(r, pi),
        gradient=lambda r: np.log(r / pi) + 1.0,
        label=f"R(.||{np.round(pi, 6).tolist()})",
        dimension=pi.size,
        pi_star=pi,
    )


def free_energy_candidate(K: Field, dimension: int, H: Optional[Field] = None) -> LyapunovCandidate:
    """F = sum (K^x + log r_x) r_x; H is the gradient of sum_z K^z r_z when known"""
    gradient = None if H is None else (lambda r: np.log(r) + 1.0 + H(r))
    return LyapunovCandidate(
        CandidateKind.GIBBS_FREE_ENERGY,
        value=lambda r: gibbs_free_energy(K, r),
        gradient=gradient,
        label="free energy F",
        dimension=dimension,
    )


def locally_gibbs_candidate(potential: Potential, dimension: int) -> LyapunovCandidate:
    return LyapunovCandidate(
        CandidateKind.LOCALLY_GIBBS_J,
        value=lambda r: locally_gibbs_J(potential, r),
        gradient=lambda r: np.log(r) + 1.0 + potential.gradient(r),
        label=f"entropy + {potential.label}",
        dimension=dimension,
    )


def custom_candidate(value: Callable[[np.ndarray], float], gradient: Optional[Field] = None,
                     label: str = "custom", dimension: Optional[int] = None) -> LyapunovCandidate:
    return LyapunovCandidate(CandidateKind.CUSTOM, value, gradient, label, dimension=dimension)


def zero_candidate(dimension: int) -> LyapunovCandidate:
    return custom_candidate(lambda r: 0.0, lambda r: np.zeros(dimension), "J = 0", dimension)


def model_candidate(model: RateFamily) -> LyapunovCandidate:
    """The candidate J = entropy + U carried by a model with a potential"""
    if model.potential is None:
        raise InvalidParameters(f"{model.label} has no potential")
    return locally_gibbs_candidate(model.potential, model.dimension)


def positive_definiteness_probe(J: LyapunovCandidate, pi_star: PointLike, radius: float,
                                samples: int = 500, seed: int = 0,
                                levels: int = 10) -> PositiveDefinitenessReport:
    """Sample the radius ball around pi_star (within the open simplex)

    Checks that J exceeds J(pi_star) at every sample and that the lowest of
    the sampled sublevel sets stays clear of the edge of the ball.
    """
    pi = as_array(pi_star)
    if radius <= 0 or samples < 1:
        raise InvalidParameters("radius and samples must be positive")
    d = pi.size
    basis = helmert_basis(d)
    rng = stream(seed, 3)
    center = J.value(pi)
    increments, distances = [], []
    witnesses = []
    for _ in range(samples):
        direction = rng.standard_normal(d - 1) @ basis
        direction /= np.linalg.norm(direction)
        distance = radius * rng.uniform() ** (1.0 / (d - 1))
        r = pi + distance * direction
        if r.min() <= 1e-9 or distance <= 1e-9 * radius:
            continue
        increment = J.value(r) - center
        increments.append(increment)
        distances.append(distance)
        if increment <= 0:
            witnesses.append(r.tolist())
    if not increments:
        raise InvalidParameters("No sample fell inside the simplex")
    increments = np.array(increments)
    distances = np.array(distances)

    level_radii: List[float] = []
    shrinks = False
    top = increments.max()
    if top > 0:
        for j in range(1, levels + 1):
            inside = increments <= top * j / levels
            level_radii.append(float(distances[inside].max()) if inside.any() else 0.0)
        shrinks = level_radii[0] < distances.max()
    passed = not witnesses and shrinks
    return PositiveDefinitenessReport(
        passed=passed,
        samples=int(increments.size),
        min_increment=float(increments.min()),
        level_radii=level_radii,
        witnesses=witnesses[:10],
    )


def descent_check(J: LyapunovCandidate, model: RateFamily, traj, pi_star: PointLike,
                  eps: float = 1e-4, margin: float = DESCENT_MARGIN, stride: int = 1) -> DescentReport:
    """Orbital derivative <DJ(p), p Gamma(p)> along a trajectory, away from the eps-ball"""
    pi = as_array(pi_star)
    states = traj.states[::max(1, stride)]
    times = traj.times[::max(1, stride)]
    if states.min() < 1e-8:
        raise BoundaryProximity(f"Trajectory reaches min coordinate {states.min():.3e}")
    samples, violations, worst = [], 0, None
    previous = None
    increases = 0
    for t, p in zip(times, states):
        derivative = float(J.gradient(p) @ (p @ model.rates(p)))
        value = J.value(p)
        outside = np.abs(p - pi).sum() > eps
        if outside:
            worst = derivative if worst is None else max(worst, derivative)
            if derivative > -margin:
                violations += 1
            if previous is not None and value - previous > 1e-14:
                increases += 1
        previous = value
        samples.append(DescentSample(t=float(t), value=value, orbital_derivative=derivative))
    if violations:
        logger.info(f"{J.label} along {traj.model_label}: {violations} descent violations")
    return DescentReport(
        trajectory_label=traj.model_label,
        samples=samples,
        violations=violations,
        epsilon_ball=eps,
        discrete_increases=increases,
        max_orbital_derivative_outside_ball=worst,
    )


def _log_ratio_form(model: RateFamily) -> Callable[[np.ndarray], np.ndarray]:
    """r -> (-log pi_k(r) + log pi_d(r))_k, the 1-form in coordinates s_k along e_k - e_d"""
    def form(r: np.ndarray) -> np.ndarray:
        log_pi = np.log(frozen_stationary(model, r))
        return log_pi[-1] - log_pi[:-1]
    return form


def potential_existence_test(model: RateFamily, grid: SimplexGrid, h: float = 1e-4,
                             reconstruct: bool = True, jobs: Optional[int] = 1) -> PotentialTestReport:
    """Closedness test of the log-ratio 1-form of the frozen stationary laws

    Mixed partials are compared by central differences in the coordinates
    s_k (moves along e_k - e_d). When the form is closed, the potential is
    recovered on the grid by integrating along segments from the barycenter.
    """
    d = model.dimension
    if grid.margin < 2 * h or min(p.min_coordinate for p in grid) < 2 * h:
        raise BoundaryProximity(f"Grid margin {grid.margin} is below 2h = {2 * h}")
    form = _log_ratio_form(model)
    directions = np.eye(d)[:-1] - np.eye(d)[-1]

    def asymmetry(point: SimplexPoint) -> float:
        r = point.weights
        derivative = np.array([(form(r + h * v) - form(r - h * v)) / (2 * h) for v in directions])
        # derivative[j, k] = d g_k / d s_j
        return float(np.abs(derivative - derivative.T).max()) if d > 2 else 0.0

    values = parallel_map(asymmetry, grid.points, jobs)
    worst = int(np.argmax(values))
    passed = values[worst] <= CURL_THRESHOLD
    report = PotentialTestReport(
        passed=passed,
        max_asymmetry=values[worst],
        worst_point=grid.points[worst],
        grid_size=len(grid),
    )
    if passed and reconstruct:
        report.reconstructed = parallel_map(lambda p: reconstruct_potential(model, p.weights), grid.points, jobs)
    logger.info(f"{model.label}: max curl asymmetry {values[worst]:.3e} -> {'pass' if passed else 'fail'}")
    return report


def reconstruct_potential(model: RateFamily, r: np.ndarray) -> float:
    """U(r) - U(barycenter) by integrating <-log pi, dr> along the straight segment"""
    start = np.full(r.size, 1.0 / r.size)
    step = r - start

    def integrand(t: float) -> float:
        return float(-np.log(frozen_stationary(model, start + t * step)) @ step)
    return integrate_1d(integrand, 0.0, 1.0)


def quadratic_form_constant(gamma: np.ndarray, pi_star: np.ndarray) -> float:
    """Half the smallest eigenvalue on the tangent hyperplane of

    r -> sum_{x != y} pi*_y (r_y / pi*_y - r_x / pi*_x)^2 Gamma_yx.
    """
    d = pi_star.size
    form = np.zeros((d, d))
    for y in range(d):
        for x in range(d):
            if x == y or gamma[y, x] <= 0:
                continue
            g = np.zeros(d)
            g[y] += 1.0 / pi_star[y]
            g[x] -= 1.0 / pi_star[x]
            form += gamma[y, x] * pi_star[y] * np.outer(g, g)
    basis = helmert_basis(d)
    return 0.5 * float(np.linalg.eigvalsh(basis @ form @ basis.T).min())


def slow_adaptation_bounds(model: RateFamily, pi_star: PointLike, samples: int = 200,
                           seed: int = 0) -> SlowAdaptationBoundReport:
    """Constants gamma_min, pi*_min, C, c and the admissible adaptation rates lambda_1, lambda_2"""
    pi = as_array(pi_star)
    gamma = model.rates(pi)
    if not check_irreducible(gamma):
        raise NotIrreducible(f"Gamma(pi*) of {model.label} is not irreducible")
    residual = float(np.abs(pi @ gamma).sum())
    if residual > 1e-10:
        raise NotFixedPoint(f"pi* has residual {residual:.3e}")
    off_diagonal = gamma[~np.eye(pi.size, dtype=bool)]
    gamma_min = float(off_diagonal[off_diagonal > 0].min())
    pi_min = float(pi.min())
    C = lipschitz_estimate(model, samples, seed)
    c = quadratic_form_constant(gamma, pi)
    lambda_1 = min(gamma_min / (16 * C), 1.0) if C > 0 else 1.0
    lambda_2 = min(lambda_1, c * pi_min / (8 * C)) if C > 0 else lambda_1
    return SlowAdaptationBoundReport(
        gamma_min=gamma_min,
        pi_star_min=pi_min,
        lipschitz_C=C,
        quadratic_c=c,
        lambda_1=lambda_1,
        lambda_2=lambda_2,
        lipschitz_samples=samples,
    )


def slow_adaptation_grid_check(model: RateFamily, pi_star: PointLike, lam: float,
                               grid: SimplexGrid) -> Tuple[int, float]:
    """Violations of strict relative-entropy descent under Gamma^lambda, and the largest derivative"""
    pi = as_array(pi_star)
    violations, largest = 0, -np.inf
    for point in grid:
        p = point.weights
        derivative = float(np.log(p / pi) @ (p @ model.rates(pi + lam * (p - pi))))
        largest = max(largest, derivative)
        if np.abs(p - pi).sum() > 1e-9 and derivative >= -DESCENT_MARGIN:
            violations += 1
    return violations, float(largest)


def empirical_lambda(model: RateFamily, pi_star: PointLike, grid: SimplexGrid,
                     tolerance: float = 1e-3) -> float:
    """Largest lambda in [0, 1] found by bisection with grid-verified descent"""
    if slow_adaptation_grid_check(model, pi_star, 1.0, grid)[0] == 0:
        return 1.0
    low, high = 0.0, 1.0
    while high - low > tolerance:
        middle = 0.5 * (low + high)
        if slow_adaptation_grid_check(model, pi_star, middle, grid)[0] == 0:
            low = middle
        else:
            high = middle
    return low
