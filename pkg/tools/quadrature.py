"""Adaptive Gauss-Kronrod quadrature with the toolkit's tolerances"""

import logging
import warnings
from typing import Callable

from scipy import integrate

from core.errors import QuadratureFailure

logger = logging.getLogger("lyapunov_toolkit.tools.quadrature")

ABS_TOLERANCE = 1e-12
MAX_SUBDIVISIONS = 10_000


def integrate_1d(f: Callable[[float], float], lower: float, upper: float,
                 epsabs: float = ABS_TOLERANCE, limit: int = MAX_SUBDIVISIONS) -> float:
    """Integral of f over [lower, upper]; raises QuadratureFailure when QUADPACK gives up"""
    if lower == upper:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.quad(f, lower, upper, epsabs=epsabs, epsrel=1e-12, limit=limit)
        except integrate.IntegrationWarning as e:
            raise QuadratureFailure(f"Quadrature on [{lower}, {upper}] failed: {e}") from e
    if error > max(epsabs, 1e-12 * abs(value)) * 10:
        raise QuadratureFailure(f"Quadrature error estimate {error:.2e} exceeds tolerance {epsabs:.0e}")
    return float(value)
