"""Birth-death chains with factorized rates"""

import logging

import numpy as np

from core.rates import Potential, RateFamily, with_diagonal
from models.spec import BirthDeathPhiPsiSpec
from tools.expressions import compile_interval_expression, compile_simplex_expression
from tools.quadrature import integrate_1d

logger = logging.getLogger("lyapunov_toolkit.models.birth_death")


class BirthDeathPhiPsi:
    """Nearest-neighbour chain on 1..d with

    Gamma_{i,i+1}(r) = psi_i(r) phi_i(r_i),  Gamma_{i,i-1}(r) = psi_{i-1}(r) phi_i(r_i).

    Stationary law pi_j proportional to 1/phi_j(r_j); potential
    U(r) = sum_j int_0^{r_j} log phi_j(w) dw.
    """

    def __init__(self, spec: BirthDeathPhiPsiSpec):
        self.d = len(spec.phi)
        self._psi = [compile_simplex_expression(text, self.d) for text in spec.psi]
        self._phi = [compile_interval_expression(text) for text in spec.phi]

    def phi(self, r: np.ndarray) -> np.ndarray:
        return np.array([f(x) for f, x in zip(self._phi, r)])

    def rates(self, r: np.ndarray) -> np.ndarray:
        phi = self.phi(r)
        psi = np.array([f.at(r) for f in self._psi])
        off = np.zeros((self.d, self.d))
        for i in range(self.d - 1):
            off[i, i + 1] = psi[i] * phi[i]
            off[i + 1, i] = psi[i] * phi[i + 1]
        return with_diagonal(off)

    def stationary(self, r: np.ndarray) -> np.ndarray:
        weights = 1.0 / self.phi(r)
        return weights / weights.sum()

    def potential_value(self, r: np.ndarray) -> float:
        return sum(integrate_1d(lambda w, f=f: np.log(f(w)), 0.0, x) for f, x in zip(self._phi, r))

    def potential_gradient(self, r: np.ndarray) -> np.ndarray:
        return np.log(self.phi(r))


def build_birth_death(spec: BirthDeathPhiPsiSpec) -> RateFamily:
    model = BirthDeathPhiPsi(spec)
    logger.info(f"BirthDeathPhiPsi model with d={model.d}")
    return RateFamily(
        spec=spec,
        dimension=model.d,
        rates=model.rates,
        label=f"BirthDeathPhiPsi(d={model.d})",
        stationary=model.stationary,
        potential=Potential(value=model.potential_value, gradient=model.potential_gradient,
                            label="sum_j int log phi_j"),
        locally_gibbs=True,
    )
