"""Metropolis-type generalized Gibbs family"""

import logging

import numpy as np

from core.lyapunov import ggibbs_potential
from core.rates import Potential, RateFamily
from models.gibbs import gibbs_law, metropolis_rates, resolve_adjacency
from models.spec import MetropolisGGibbsSpec
from tools.expressions import compile_interval_expression, gibbs_fields

logger = logging.getLogger("lyapunov_toolkit.models.metropolis")


class MetropolisGGibbs:
    """Rates exp(-(G_y - G_x)^+) alpha(x, y) with G_x(r) = H^x(r) + R(x, r_x)

    The stationary law of Gamma(r) is proportional to exp(-G(r)) and
    U(r) = sum_z [int_0^{r_z} R(z, w) dw + K^z(r) r_z] is its potential.
    """

    def __init__(self, spec: MetropolisGGibbsSpec):
        self.d = len(spec.K)
        self._potential, self._k_fields, self._h_fields = gibbs_fields(spec.K)
        self._r_fields = [compile_interval_expression(text) for text in spec.R]
        self.adjacency = resolve_adjacency(spec.adjacency, self.d)

    def K(self, r: np.ndarray) -> np.ndarray:
        return np.array([k.at(r) for k in self._k_fields])

    def H(self, r: np.ndarray) -> np.ndarray:
        return np.array([h.at(r) for h in self._h_fields])

    def G(self, r: np.ndarray) -> np.ndarray:
        return self.H(r) + np.array([f(x) for f, x in zip(self._r_fields, r)])

    def rates(self, r: np.ndarray) -> np.ndarray:
        return metropolis_rates(self.G(r), self.adjacency)

    def stationary(self, r: np.ndarray) -> np.ndarray:
        return gibbs_law(self.G(r))

    def potential_value(self, r: np.ndarray) -> float:
        return ggibbs_potential(self.K, self._r_fields, r)


def build_metropolis(spec: MetropolisGGibbsSpec) -> RateFamily:
    model = MetropolisGGibbs(spec)
    logger.info(f"MetropolisGGibbs model with d={model.d}")
    return RateFamily(
        spec=spec,
        dimension=model.d,
        rates=model.rates,
        label=f"MetropolisGGibbs(d={model.d})",
        stationary=model.stationary,
        potential=Potential(value=model.potential_value, gradient=model.G, label="generalized Gibbs potential"),
        locally_gibbs=True,
    )
