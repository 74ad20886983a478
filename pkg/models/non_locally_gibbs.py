"""Three-state family with an explicit stationary-equation solution but no potential in general"""

import logging

import numpy as np

from core.errors import InvalidParameters
from core.rates import Potential, RateFamily
from core.simplex import random_interior
from models.spec import NonLocallyGibbsSpec
from tools.expressions import compile_interval_expression, compile_simplex_expression
from tools.quadrature import integrate_1d
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.models.non_locally_gibbs")

RANGE_CHECK_SAMPLES = 200


class NonLocallyGibbs:
    """Birth-death chain on three states with

    b2(r) = (1 + (r2 - r3 psi(r3)) a2(r)) a1(r),  b3(r) = psi(r3) a2(r) (1 + (r2 - r1) a1(r)).

    U(r) = int_0^{r3} log psi solves the stationary equation even though the
    frozen laws admit no potential for general a1, a2.
    """

    def __init__(self, spec: NonLocallyGibbsSpec):
        self._a1 = compile_simplex_expression(spec.a1, 3)
        self._a2 = compile_simplex_expression(spec.a2, 3)
        self._psi = compile_interval_expression(spec.psi)

    def coefficients(self, r: np.ndarray):
        a1, a2, psi = self._a1.at(r), self._a2.at(r), self._psi(r[2])
        b2 = (1.0 + (r[1] - r[2] * psi) * a2) * a1
        b3 = psi * a2 * (1.0 + (r[1] - r[0]) * a1)
        return a1, a2, b2, b3

    def rates(self, r: np.ndarray) -> np.ndarray:
        a1, a2, b2, b3 = self.coefficients(r)
        return np.array([
            [-a1, a1, 0.0],
            [b2, -(a2 + b2), a2],
            [0.0, b3, -b3],
        ])

    def stationary(self, r: np.ndarray) -> np.ndarray:
        a1, a2, b2, b3 = self.coefficients(r)
        weights = np.array([b2 * b3 / (a1 * a2), b3 / a2, 1.0])
        return weights / weights.sum()

    def potential_value(self, r: np.ndarray) -> float:
        return integrate_1d(lambda w: np.log(self._psi(w)), 0.0, r[2])

    def potential_gradient(self, r: np.ndarray) -> np.ndarray:
        return np.array([0.0, 0.0, np.log(self._psi(r[2]))])

    def check_ranges(self, samples: np.ndarray) -> None:
        for r in samples:
            a1, a2, psi = self._a1.at(r), self._a2.at(r), self._psi(r[2])
            if not (0 < a1 < 1 and 0 < a2 < 1):
                raise InvalidParameters(f"a1, a2 must take values in (0, 1); got {a1:.4g}, {a2:.4g} at {r}")
            if not 0 < psi < 1:
                raise InvalidParameters(f"psi must take values in (0, 1); got {psi:.4g} at w={r[2]:.4g}")


def build_non_locally_gibbs(spec: NonLocallyGibbsSpec) -> RateFamily:
    model = NonLocallyGibbs(spec)
    rng = stream(0, 2)
    samples = [random_interior(3, rng) for _ in range(RANGE_CHECK_SAMPLES)]
    model.check_ranges(np.vstack([np.eye(3), np.full((1, 3), 1.0 / 3.0), samples]))
    return RateFamily(
        spec=spec,
        dimension=3,
        rates=model.rates,
        label="NonLocallyGibbs",
        stationary=model.stationary,
        potential=Potential(value=model.potential_value, gradient=model.potential_gradient,
                            label="int_0^{r3} log psi"),
        locally_gibbs=False,
    )
