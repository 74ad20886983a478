"""Birth-death family whose rates depend on cumulative cost coordinates"""

import logging

import numpy as np

from core.rates import Potential, RateFamily, with_diagonal
from models.spec import NearestNeighborCostSpec
from tools.expressions import compile_interval_expression
from tools.quadrature import integrate_1d

logger = logging.getLogger("lyapunov_toolkit.models.nearest_neighbor")


class NearestNeighborCost:
    """Gamma_{i,i+1}(r) = a^i(u_i), Gamma_{i+1,i}(r) = b^{i+1}(u_i), u_i = r_{i+1} + ... + r_d

    psi^i = a^i / b^{i+1} is the ratio pi_{i+1}/pi_i of the frozen law and
    U(r) = -sum_i int_0^{u_i} log psi^i(w) dw.
    """

    def __init__(self, spec: NearestNeighborCostSpec):
        self.d = len(spec.a) + 1
        self._up = [compile_interval_expression(text) for text in spec.a]
        self._down = [compile_interval_expression(text) for text in spec.b]

    def costs(self, r: np.ndarray) -> np.ndarray:
        """u_i = <r, c^i> for i = 1..d-1"""
        return np.cumsum(r[::-1])[::-1][1:]

    def psi(self, i: int, w: float) -> float:
        return self._up[i](w) / self._down[i](w)

    def rates(self, r: np.ndarray) -> np.ndarray:
        off = np.zeros((self.d, self.d))
        for i, u in enumerate(self.costs(r)):
            off[i, i + 1] = self._up[i](u)
            off[i + 1, i] = self._down[i](u)
        return with_diagonal(off)

    def stationary(self, r: np.ndarray) -> np.ndarray:
        ratios = [self.psi(i, u) for i, u in enumerate(self.costs(r))]
        weights = np.concatenate([[1.0], np.cumprod(ratios)])
        return weights / weights.sum()

    def potential_value(self, r: np.ndarray) -> float:
        return -sum(
            integrate_1d(lambda w, i=i: np.log(self.psi(i, w)), 0.0, u)
            for i, u in enumerate(self.costs(r))
        )

    def potential_gradient(self, r: np.ndarray) -> np.ndarray:
        logs = np.array([np.log(self.psi(i, u)) for i, u in enumerate(self.costs(r))])
        return -np.concatenate([[0.0], np.cumsum(logs)])


def build_nearest_neighbor(spec: NearestNeighborCostSpec) -> RateFamily:
    model = NearestNeighborCost(spec)
    logger.info(f"NearestNeighborCost model with d={model.d}")
    return RateFamily(
        spec=spec,
        dimension=model.d,
        rates=model.rates,
        label=f"NearestNeighborCost(d={model.d})",
        stationary=model.stationary,
        potential=Potential(value=model.potential_value, gradient=model.potential_gradient,
                            label="-sum_j int log psi^j"),
        locally_gibbs=True,
    )
