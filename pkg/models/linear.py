"""Linear Markov chains: a constant rate matrix"""

import logging

import numpy as np

from core.dynamics import stationary_distribution
from core.rates import Potential, RateFamily, check_irreducible, validate_rate_matrix
from models.spec import LinearSpec

logger = logging.getLogger("lyapunov_toolkit.models.linear")


def build_linear(spec: LinearSpec) -> RateFamily:
    gamma = validate_rate_matrix(np.array(spec.gamma, dtype=float))
    gamma.setflags(write=False)
    d = gamma.shape[0]
    label = f"Linear(d={d})"
    if not check_irreducible(gamma):
        logger.info(f"{label} is reducible; no stationary law or potential attached")
        return RateFamily(spec=spec, dimension=d, rates=lambda r: gamma.copy(), label=label)

    pi = stationary_distribution(gamma)
    energy = -np.log(pi)
    return RateFamily(
        spec=spec,
        dimension=d,
        rates=lambda r: gamma.copy(),
        label=label,
        stationary=lambda r: pi.copy(),
        # entropy + <r, -log pi> is the relative entropy to pi
        potential=Potential(value=lambda r: float(r @ energy), gradient=lambda r: energy.copy(),
                            label="<r, -log pi>"),
        locally_gibbs=True,
    )
