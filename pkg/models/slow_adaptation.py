"""Slow adaptation Gamma^lambda(p) = Gamma(pi* + lambda (p - pi*))"""

import logging
from typing import Callable

import numpy as np

from core.errors import InvalidParameters
from core.rates import RateFamily
from models.gibbs import GibbsAffine
from models.spec import GibbsAffineSpec, SlowAdaptationSpec

logger = logging.getLogger("lyapunov_toolkit.models.slow_adaptation")


def contract(pi_star: np.ndarray, lam: float) -> Callable[[np.ndarray], np.ndarray]:
    # convex combination of two simplex points, never leaves the simplex
    return lambda p: pi_star + lam * (p - pi_star)


def build_slow_adaptation(spec: SlowAdaptationSpec, build_base: Callable[[object], RateFamily]) -> RateFamily:
    base = build_base(spec.base)
    pi_star = np.array(spec.pi_star, dtype=float)
    if pi_star.size != base.dimension:
        raise InvalidParameters(f"pi_star has dimension {pi_star.size}, base model has {base.dimension}")
    lam = float(spec.lambda_)
    label = f"SlowAdaptation({base.label}, lambda={lam:g})"

    if isinstance(spec.base, GibbsAffineSpec):
        # Still Gibbs: V^lambda = V + 2 beta (1 - lambda) W pi*, W^lambda = lambda W
        gibbs = GibbsAffine.from_spec(spec.base)
        shifted = GibbsAffine(
            V=gibbs.V + 2.0 * gibbs.beta * (1.0 - lam) * gibbs.W @ pi_star,
            W=lam * gibbs.W,
            beta=gibbs.beta,
            adjacency=gibbs.adjacency,
        )
        logger.info(f"{label}: slowed Gibbs family carries the corrected free energy")
        return shifted.family(spec, label)

    argument = contract(pi_star, lam)
    stationary = None
    if base.stationary is not None:
        stationary = lambda p: base.stationary(argument(p))
    return RateFamily(
        spec=spec,
        dimension=base.dimension,
        rates=lambda p: base.rates(argument(p)),
        label=label,
        stationary=stationary,
    )
