"""Three-state nearest-neighbour families with a state-dependent barrier B(r)"""

import logging
from typing import Union

import numpy as np

from core.rates import Potential, RateFamily
from models.spec import ThreeStateBSpec, ThreeStateNonGibbsSpec

logger = logging.getLogger("lyapunov_toolkit.models.three_state")


class ThreeStateB:
    """Gamma(r) = [[-a1, a1, 0], [b2 B, -b2 B - a2, a2], [0, b3, -b3]]

    with B(r) = exp(kappa <r - r*, c>). When c2 == c3 the family is locally
    Gibbs with the potential returned by potential_value.
    """

    def __init__(self, spec: Union[ThreeStateBSpec, ThreeStateNonGibbsSpec]):
        self.a1, self.a2, self.b2, self.b3 = spec.a1, spec.a2, spec.b2, spec.b3
        self.kappa = spec.kappa
        self.c = np.array(spec.c, dtype=float)
        if spec.r_star is None:
            self.r_star = self.frozen_stationary(1.0)
        else:
            self.r_star = np.array(spec.r_star, dtype=float)

    def frozen_stationary(self, barrier: float) -> np.ndarray:
        weights = np.array([self.b2 * self.b3 * barrier, self.a1 * self.b3, self.a1 * self.a2])
        return weights / weights.sum()

    def barrier(self, r: np.ndarray) -> float:
        return float(np.exp(self.kappa * (r - self.r_star) @ self.c))

    def rates(self, r: np.ndarray) -> np.ndarray:
        down = self.b2 * self.barrier(r)
        return np.array([
            [-self.a1, self.a1, 0.0],
            [down, -down - self.a2, self.a2],
            [0.0, self.b3, -self.b3],
        ])

    def stationary(self, r: np.ndarray) -> np.ndarray:
        return self.frozen_stationary(self.barrier(r))

    @property
    def has_potential(self) -> bool:
        return self.c[1] == self.c[2]

    def potential_value(self, r: np.ndarray) -> float:
        kappa, c = self.kappa, self.c
        return float(
            kappa * r[0] * ((self.r_star - r) @ c)
            + np.log(self.a1 * self.a2 / (self.b2 * self.b3)) * r[0]
            + np.log(self.a2 / self.b3) * r[1]
            + 0.5 * kappa * r[0] ** 2 * (c[0] - c[1])
        )

    def potential_gradient(self, r: np.ndarray) -> np.ndarray:
        kappa, c = self.kappa, self.c
        return np.array([
            kappa * ((self.r_star - r) @ c) - kappa * r[0] * c[1] + np.log(self.a1 * self.a2 / (self.b2 * self.b3)),
            -kappa * r[0] * c[1] + np.log(self.a2 / self.b3),
            -kappa * r[0] * c[2],
        ])

    def potential(self) -> Potential:
        return Potential(value=self.potential_value, gradient=self.potential_gradient, label="three-state potential")


def non_gibbs_rates(q: np.ndarray) -> np.ndarray:
    """Rate matrix with q as its stationary law for every q; never reversible"""
    q1, q2, q3 = q
    return np.array([
        [-2 * q2 * q3, q2 * q3, q2 * q3],
        [2 * q1 * q3, -4 * q1 * q3, 2 * q1 * q3],
        [0.0, 3 * q1 * q2, -3 * q1 * q2],
    ])


class ThreeStateNonGibbs(ThreeStateB):
    """Gamma_bar(r) = non_gibbs_rates(pi(r)) with pi(r) the ThreeStateB law"""

    def rates(self, r: np.ndarray) -> np.ndarray:
        return non_gibbs_rates(self.stationary(r))


def build_three_state_b(spec: ThreeStateBSpec) -> RateFamily:
    model = ThreeStateB(spec)
    if not model.has_potential:
        logger.info(f"ThreeStateB with c2 != c3 ({model.c[1]} vs {model.c[2]}) carries no potential")
    return RateFamily(
        spec=spec,
        dimension=3,
        rates=model.rates,
        label=f"ThreeStateB(kappa={model.kappa:g})",
        stationary=model.stationary,
        potential=model.potential() if model.has_potential else None,
        locally_gibbs=model.has_potential,
    )


def build_three_state_non_gibbs(spec: ThreeStateNonGibbsSpec) -> RateFamily:
    model = ThreeStateNonGibbs(spec)
    return RateFamily(
        spec=spec,
        dimension=3,
        rates=model.rates,
        label=f"ThreeStateNonGibbs(kappa={model.kappa:g})",
        stationary=model.stationary,
        potential=model.potential(),
        locally_gibbs=True,
    )
