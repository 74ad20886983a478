"""Mean-field loss network with M call classes sharing capacity C"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import gammaln, softmax

from core.rates import Potential, RateFamily, with_diagonal
from models.spec import TelecomSpec

logger = logging.getLogger("lyapunov_toolkit.models.telecom")


@dataclass(frozen=True)
class TelecomStateSpace:
    """Occupancy vectors x with sum_m x_m A_m <= C in graded lexicographic order"""

    states: Tuple[Tuple[int, ...], ...]
    index: Dict[Tuple[int, ...], int]

    @classmethod
    def enumerate(cls, capacity: int, requirements: List[int]) -> "TelecomStateSpace":
        ranges = [range(capacity // a + 1) for a in requirements]
        feasible = [
            x for x in itertools.product(*ranges)
            if sum(xm * a for xm, a in zip(x, requirements)) <= capacity
        ]
        states = tuple(sorted(feasible, key=lambda x: (sum(x), x)))
        return cls(states=states, index={x: i for i, x in enumerate(states)})

    def __len__(self) -> int:
        return len(self.states)

    def as_array(self) -> np.ndarray:
        return np.array(self.states, dtype=float)


class Telecom:
    """Up rate lambda_m + gamma_m a_m(r) to x + f_m, down rate x_m (mu_m + gamma_m) to x - f_m

    a_m(r) = sum_x r_x x_m. The frozen law is the truncated product form
    pi_x proportional to prod_m rho_m(r)^{x_m} / x_m! and
    U(r) = sum_x r_x sum_m [log x_m! + x_m log(mu_m + gamma_m)]
           - sum_m int_0^{a_m(r)} log(lambda_m + gamma_m w) dw.
    """

    def __init__(self, spec: TelecomSpec):
        self.space = TelecomStateSpace.enumerate(spec.C, list(spec.A))
        self.lambdas = np.array(spec.lambdas, dtype=float)
        self.mus = np.array(spec.mus, dtype=float)
        self.gammas = np.array(spec.gammas, dtype=float)
        self.occupancy = self.space.as_array()
        self.d = len(self.space)
        self._edges = self._transitions()
        # sum_m log x_m! + x_m log(mu_m + gamma_m), constant part of dU/dr_x
        self._static_energy = gammaln(self.occupancy + 1).sum(axis=1) + self.occupancy @ np.log(self.mus + self.gammas)

    def _transitions(self) -> List[Tuple[int, int, int, bool]]:
        edges = []
        for i, x in enumerate(self.space.states):
            for m in range(len(x)):
                up = x[:m] + (x[m] + 1,) + x[m + 1:]
                if up in self.space.index:
                    edges.append((i, self.space.index[up], m, True))
                if x[m] > 0:
                    down = x[:m] + (x[m] - 1,) + x[m + 1:]
                    edges.append((i, self.space.index[down], m, False))
        return edges

    def means(self, r: np.ndarray) -> np.ndarray:
        return r @ self.occupancy

    def rates(self, r: np.ndarray) -> np.ndarray:
        arrival = self.lambdas + self.gammas * self.means(r)
        off = np.zeros((self.d, self.d))
        for source, target, m, is_up in self._edges:
            if is_up:
                off[source, target] = arrival[m]
            else:
                off[source, target] = self.occupancy[source, m] * (self.mus[m] + self.gammas[m])
        return with_diagonal(off)

    def log_loads(self, r: np.ndarray) -> np.ndarray:
        return np.log(self.lambdas + self.gammas * self.means(r)) - np.log(self.mus + self.gammas)

    def stationary(self, r: np.ndarray) -> np.ndarray:
        log_weights = self.occupancy @ self.log_loads(r) - gammaln(self.occupancy + 1).sum(axis=1)
        return softmax(log_weights)

    def potential_value(self, r: np.ndarray) -> float:
        a = self.means(r)
        lam, gam = self.lambdas, self.gammas
        # closed-form int_0^a log(lam + gam w) dw
        integrals = ((lam + gam * a) * np.log(lam + gam * a) - lam * np.log(lam)) / gam - a
        return float(r @ self._static_energy - integrals.sum())

    def potential_gradient(self, r: np.ndarray) -> np.ndarray:
        return self._static_energy - self.occupancy @ np.log(self.lambdas + self.gammas * self.means(r))


def build_telecom(spec: TelecomSpec) -> RateFamily:
    model = Telecom(spec)
    logger.info(f"Telecom model with M={spec.M}, C={spec.C}: {model.d} states")
    return RateFamily(
        spec=spec,
        dimension=model.d,
        rates=model.rates,
        label=f"Telecom(M={spec.M}, C={spec.C})",
        stationary=model.stationary,
        potential=Potential(value=model.potential_value, gradient=model.potential_gradient,
                            label="loss-network potential"),
        locally_gibbs=True,
    )
