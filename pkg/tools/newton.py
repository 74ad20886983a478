"""Damped Newton ascent for smooth concave objectives"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from core.errors import Infeasible, MaxIterations, OverflowGuard

logger = logging.getLogger("lyapunov_toolkit.tools.newton")


@dataclass
class NewtonResult:
    x: np.ndarray
    value: float
    gradient_norm: float
    iterations: int


def newton_ascent(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    hessian: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tolerance: float = 1e-10,
    max_iterations: int = 200,
    divergence_radius: float = 1e3,
) -> NewtonResult:
    """Maximize a concave objective by Newton steps with Armijo backtracking

    Raises Infeasible when the iterate leaves the divergence radius and
    MaxIterations when the cap is hit.
    """
    x = np.array(x0, dtype=float)
    value = objective(x)
    for iteration in range(max_iterations + 1):
        g = gradient(x)
        g_norm = float(np.linalg.norm(g))
        if g_norm <= tolerance:
            return NewtonResult(x=x, value=value, gradient_norm=g_norm, iterations=iteration)
        if iteration == max_iterations:
            break

        direction = _ascent_direction(hessian(x), g)
        slope = float(g @ direction)
        step = 1.0
        while True:
            candidate = x + step * direction
            try:
                candidate_value = objective(candidate)
            except OverflowGuard:
                candidate_value = -np.inf
            if candidate_value >= value + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-12:
                # No further ascent available at double precision
                return NewtonResult(x=x, value=value, gradient_norm=g_norm, iterations=iteration)
        x, value = candidate, candidate_value
        if np.linalg.norm(x) > divergence_radius:
            raise Infeasible(f"Newton iterate norm {np.linalg.norm(x):.3e} exceeds {divergence_radius:.0e}")

    raise MaxIterations(f"Newton ascent did not converge in {max_iterations} iterations (|grad|={g_norm:.3e})")


def _ascent_direction(hess: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Newton direction -H^{-1} g, falling back to the gradient when H is not negative definite"""
    try:
        direction = -np.linalg.solve(hess, g)
    except np.linalg.LinAlgError:
        return g
    if not np.all(np.isfinite(direction)) or g @ direction <= 0:
        return g
    return direction
