"""Large-deviation Hamiltonian H(r, alpha), its Legendre dual L(r, beta) and related checks"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from core.errors import (
    BoundaryProximity,
    Infeasible,
    InvalidInput,
    InvalidParameters,
    MaxIterations,
    NoConvergence,
    NotReversible,
    NotStationary,
    OverflowGuard,
    SupportViolation,
)
from core.lyapunov import LyapunovCandidate
from core.rates import RateFamily, check_irreducible, is_reversible
from core.reports import ConcavityReport, DualityReport, SubsolutionReport, Verdict
from core.simplex import PointLike, SimplexGrid, VectorLike, as_array, random_interior, random_tangent
from tools.newton import newton_ascent
from tools.parallel import parallel_map
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.core.hamiltonian")

EXPONENT_GUARD = 700.0
PRIMAL_MAX_ITERATIONS = 1000
PRIMAL_CONSTRAINT_TOLERANCE = 1e-9
SLSQP_ITERATION_LIMIT = 9
SOLUTION_TOLERANCE_ANALYTIC = 1e-7
SOLUTION_TOLERANCE_FD = 1e-4


def edge_weights(model: RateFamily, r: np.ndarray) -> np.ndarray:
    """Lambda_xy = r_x Gamma_xy(r) on off-diagonal entries, zero on the diagonal"""
    weights = r[:, None] * model.rates(r)
    np.fill_diagonal(weights, 0.0)
    return np.clip(weights, 0.0, None)


def _exponents(weights: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """-(alpha_y - alpha_x) on active edges, zero elsewhere"""
    exponents = alpha[:, None] - alpha[None, :]
    exponents = np.where(weights > 0, exponents, 0.0)
    if exponents.max() > EXPONENT_GUARD:
        raise OverflowGuard(f"Exponent {exponents.max():.1f} exceeds {EXPONENT_GUARD}")
    return exponents


def hamiltonian_from_weights(weights: np.ndarray, alpha: np.ndarray) -> float:
    return float(-(weights * np.expm1(_exponents(weights, alpha))).sum())


def hamiltonian_gradient_from_weights(weights: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    tilted = weights * np.exp(_exponents(weights, alpha))
    return tilted.sum(axis=0) - tilted.sum(axis=1)


def hamiltonian_hessian_from_weights(weights: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    tilted = weights * np.exp(_exponents(weights, alpha))
    symmetric = tilted + tilted.T
    return symmetric - np.diag(symmetric.sum(axis=1))


def _alpha(alpha, d: int) -> np.ndarray:
    alpha = np.asarray(as_array(alpha), dtype=float)
    if alpha.shape != (d,) or not np.all(np.isfinite(alpha)):
        raise InvalidInput(f"alpha must be a finite vector of length {d}")
    return alpha


def hamiltonian_H(model: RateFamily, r: PointLike, alpha) -> float:
    """H(r, alpha) = -sum r_x Gamma_xy(r) [exp(-(alpha_y - alpha_x)) - 1]"""
    r = as_array(r)
    return hamiltonian_from_weights(edge_weights(model, r), _alpha(alpha, r.size))


def hamiltonian_gradient(model: RateFamily, r: PointLike, alpha) -> np.ndarray:
    """Gradient of H(r, .) in alpha; equals r Gamma(r) at alpha = 0"""
    r = as_array(r)
    return hamiltonian_gradient_from_weights(edge_weights(model, r), _alpha(alpha, r.size))


def _tangent_beta(beta: VectorLike, d: int) -> np.ndarray:
    beta = np.asarray(as_array(beta), dtype=float)
    if beta.shape != (d,):
        raise InvalidInput(f"beta must have length {d}")
    if abs(beta.sum()) > 1e-12 * max(1.0, np.abs(beta).max()) * d:
        raise InvalidInput(f"beta must sum to zero, sums to {beta.sum():.3e}")
    return beta


def _lagrangian_from_weights(weights: np.ndarray, beta: np.ndarray) -> float:
    d = beta.size

    def embed(z):
        return np.append(z, 0.0)

    def objective(z):
        a = embed(z)
        return hamiltonian_from_weights(weights, a) - a @ beta

    def gradient(z):
        return (hamiltonian_gradient_from_weights(weights, embed(z)) - beta)[:-1]

    def hessian(z):
        return hamiltonian_hessian_from_weights(weights, embed(z))[:-1, :-1]

    result = newton_ascent(objective, gradient, hessian, np.zeros(d - 1))
    return max(result.value, 0.0)


def lagrangian_L(model: RateFamily, r: PointLike, beta: VectorLike) -> float:
    """L(r, beta) = sup_alpha [H(r, alpha) - <alpha, beta>] by Newton ascent with alpha_d = 0"""
    r = as_array(r)
    return _lagrangian_from_weights(edge_weights(model, r), _tangent_beta(beta, r.size))


def lagrangian_L_primal(model: RateFamily, r: PointLike, beta: VectorLike,
                        max_iterations: int = PRIMAL_MAX_ITERATIONS) -> float:
    """min sum Lambda_e l(u_e / Lambda_e) over fluxes u >= 0 with sum_e u_e (e_y - e_x) = beta

    l(z) = z log z - z + 1. Solved directly as a constrained convex program.
    """
    r = as_array(r)
    d = r.size
    beta = _tangent_beta(beta, d)
    weights = edge_weights(model, r)
    sources, targets = np.nonzero(weights > 0)
    lam = weights[sources, targets]
    incidence = np.zeros((d, lam.size))
    incidence[targets, np.arange(lam.size)] += 1.0
    incidence[sources, np.arange(lam.size)] -= 1.0

    feasibility = optimize.linprog(np.zeros(lam.size), A_eq=incidence[:-1], b_eq=beta[:-1],
                                   bounds=[(0, None)] * lam.size, method="highs")
    if feasibility.status != 0:
        raise Infeasible("No nonnegative edge flux produces beta")

    def cost(u):
        safe = np.maximum(u, 1e-300)
        return float(np.sum(u * np.log(safe / lam) - u + lam))

    def cost_gradient(u):
        return np.log(np.maximum(u, 1e-300) / lam)

    start = np.maximum(lam + np.linalg.lstsq(incidence, beta - incidence @ lam, rcond=None)[0], 1e-12)
    result = optimize.minimize(
        cost, start, jac=cost_gradient, method="SLSQP",
        bounds=[(0.0, None)] * lam.size,
        constraints=[{"type": "eq", "fun": lambda u: incidence[:-1] @ u - beta[:-1],
                      "jac": lambda u: incidence[:-1]}],
        options={"ftol": 1e-15, "maxiter": max_iterations},
    )
    if not result.success:
        if result.status == SLSQP_ITERATION_LIMIT:
            raise MaxIterations(f"Primal flux solve did not converge in {max_iterations} iterations")
        # a line-search stall at machine precision is kept only on the constraint set
        residual = float(np.abs(incidence[:-1] @ result.x - beta[:-1]).max())
        if residual > PRIMAL_CONSTRAINT_TOLERANCE or result.x.min() < -PRIMAL_CONSTRAINT_TOLERANCE:
            raise NoConvergence(f"Primal flux solve failed: {result.message} (constraint residual {residual:.3e})")
        logger.warning(f"Primal flux solve stopped early on a feasible point: {result.message}")
    return max(float(result.fun), 0.0)


def _duality_sample(model: RateFamily, seed: int, index: int, alpha_scale: float, primal: bool):
    rng = stream(seed, index)
    r = random_interior(model.dimension, rng, margin=0.02)
    alpha = random_tangent(model.dimension, rng, alpha_scale)
    weights = edge_weights(model, r)
    beta_star = hamiltonian_gradient_from_weights(weights, alpha)
    value = _lagrangian_from_weights(weights, beta_star)
    roundtrip = abs(alpha @ beta_star + value - hamiltonian_from_weights(weights, alpha))
    dual1 = _lagrangian_from_weights(weights, r @ model.rates(r))
    gap = None
    if primal:
        gap = abs(lagrangian_L_primal(model, r, beta_star) - value)
    return roundtrip, dual1, gap


def duality_check(model: RateFamily, samples: int, seed: int = 0, alpha_scale: float = 1.0,
                  primal_samples: int = 0, jobs: Optional[int] = 1) -> DualityReport:
    """Legendre roundtrip H = <alpha, beta*> + L(beta*) with beta* = grad H, and L(r, r Gamma(r)) = 0"""
    if samples < 1:
        raise InvalidParameters(f"duality_check needs at least one sample, got {samples}")
    results = parallel_map(
        lambda i: _duality_sample(model, seed, i, alpha_scale, i < primal_samples), range(samples), jobs
    )
    gaps = [gap for _, _, gap in results if gap is not None]
    report = DualityReport(
        samples=samples,
        max_roundtrip_error=max(r for r, _, _ in results),
        max_dual1_error=max(d for _, d, _ in results),
        max_primal_gap=max(gaps) if gaps else None,
    )
    logger.info(f"{model.label}: roundtrip {report.max_roundtrip_error:.2e}, dual-1 {report.max_dual1_error:.2e}")
    return report


def concavity_probe(model: RateFamily, r: PointLike, alpha, w, rho_grid: Sequence[float]) -> ConcavityReport:
    """Second central differences of rho -> H(r, alpha + rho w) against the analytic second derivative"""
    r = as_array(r)
    d = r.size
    alpha, w = _alpha(alpha, d), _alpha(w, d)
    rho = np.asarray(rho_grid, dtype=float)
    if rho.size < 3:
        raise InvalidParameters("rho_grid needs at least three points")
    spacing = np.diff(rho)
    if np.abs(spacing - spacing[0]).max() > 1e-12 * max(1.0, np.abs(rho).max()) or spacing[0] <= 0:
        raise InvalidParameters("rho_grid must be increasing and uniformly spaced")
    delta = spacing[0]
    weights = edge_weights(model, r)
    values = np.array([hamiltonian_from_weights(weights, alpha + x * w) for x in rho])
    second = (values[2:] - 2 * values[1:-1] + values[:-2]) / delta ** 2

    w_jump = (w[None, :] - w[:, None]) ** 2
    analytic = np.array([
        -float((weights * w_jump * np.exp(_exponents(weights, alpha + x * w))).sum()) for x in rho[1:-1]
    ])
    strict_expected = bool(np.ptp(w) > 1e-12 and r.min() > 0 and check_irreducible(model.rates(r)))
    largest = float(second.max())
    return ConcavityReport(
        rho=rho.tolist(),
        values=values.tolist(),
        second_differences=second.tolist(),
        analytic_second_derivative=analytic.tolist(),
        max_second_difference=largest,
        max_fd_gap=float(np.abs(second - analytic).max()),
        concave=largest <= 1e-10,
        strict_expected=strict_expected,
        strictly_concave=largest <= -1e-8,
    )


def subsolution_check(model: RateFamily, J: LyapunovCandidate, grid: SimplexGrid,
                      jobs: Optional[int] = 1) -> SubsolutionReport:
    """Evaluate H(r, -DJ(r)) over the grid and classify J as solution, subsolution or neither"""
    if min(point.min_coordinate for point in grid) < 1e-3:
        raise BoundaryProximity("Subsolution grids need a margin of at least 1e-3")

    def evaluate(point) -> float:
        r = point.weights
        return hamiltonian_from_weights(edge_weights(model, r), -J.gradient(r))

    values = np.array(parallel_map(evaluate, grid.points, jobs))
    tolerance = SOLUTION_TOLERANCE_ANALYTIC if J.has_analytic_gradient else SOLUTION_TOLERANCE_FD
    max_abs = float(np.abs(values).max())
    minimum = float(values.min())
    if max_abs <= tolerance:
        verdict, worst = Verdict.SOLUTION, int(np.argmax(np.abs(values)))
    elif minimum >= -tolerance:
        verdict, worst = Verdict.SUBSOLUTION, int(np.argmin(values))
    else:
        verdict, worst = Verdict.VIOLATION, int(np.argmin(values))
    logger.info(f"{model.label} / {J.label}: {verdict.value} (max |H| = {max_abs:.3e})")
    return SubsolutionReport(
        grid_size=len(grid),
        min_value=minimum,
        max_abs_value=max_abs,
        worst_point=grid.points[worst],
        verdict=verdict,
        tolerance=tolerance,
        values=values.tolist(),
    )


def orbital_derivative(model: RateFamily, J: LyapunovCandidate, r: PointLike) -> float:
    """<DJ(r), r Gamma(r)>"""
    r = as_array(r)
    if r.min() < 1e-12:
        raise BoundaryProximity(f"Min coordinate {r.min():.3e} is on the boundary")
    return float(J.gradient(r) @ (r @ model.rates(r)))


def _check_stationary(gamma: np.ndarray, pi: np.ndarray) -> None:
    residual = float(np.abs(pi @ gamma).sum())
    if residual > 1e-10:
        raise NotStationary(f"pi Gamma has residual {residual:.3e}")


def dirichlet_form(gamma: np.ndarray, pi: PointLike, f, g) -> float:
    """E(f, g) = -sum_x f(x) (Gamma g)(x) pi_x"""
    gamma, pi = np.asarray(gamma, dtype=float), as_array(pi)
    _check_stationary(gamma, pi)
    f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
    return float(-(f * (gamma @ g) * pi).sum())


def dv_rate_reversible(gamma: np.ndarray, pi: PointLike, mu: PointLike) -> float:
    """Donsker-Varadhan rate I(mu) = E(sqrt(mu/pi), sqrt(mu/pi)) for reversible Gamma"""
    gamma, pi, mu = np.asarray(gamma, dtype=float), as_array(pi), as_array(mu)
    _check_stationary(gamma, pi)
    if not is_reversible(gamma, pi):
        raise NotReversible("Gamma violates detailed balance with respect to pi")
    if np.any((mu > 0) & (pi <= 0)):
        raise SupportViolation("mu charges a state where pi has no mass")
    density = np.sqrt(np.divide(mu, pi, out=np.zeros_like(mu), where=pi > 0))
    return max(dirichlet_form(gamma, pi, density, density), 0.0)


def dv_rate_sup_form(gamma: np.ndarray, mu: PointLike) -> float:
    """sup over f > 0 of -sum mu_x (Gamma f)(x) / f(x), two-state chains only"""
    gamma, mu = np.asarray(gamma, dtype=float), as_array(mu)
    if gamma.shape != (2, 2):
        raise InvalidParameters("The sup-form rate is only implemented for two states")

    def negative_objective(log_ratio: float) -> float:
        f = np.array([1.0, np.exp(log_ratio)])
        return float(((gamma @ f) / f) @ mu)

    result = optimize.minimize_scalar(negative_objective, bounds=(-50.0, 50.0), method="bounded",
                                      options={"xatol": 1e-12})
    return -float(result.fun)


def dirichlet_ratio(gamma: np.ndarray, pi: PointLike, density) -> float:
    """E(sqrt f, sqrt f) / E(f, log f) for a positive density f"""
    density = np.asarray(density, dtype=float)
    if density.min() <= 0:
        raise InvalidInput("Density must be positive")
    numerator = dirichlet_form(gamma, pi, np.sqrt(density), np.sqrt(density))
    denominator = dirichlet_form(gamma, pi, density, np.log(density))
    return numerator / denominator
