"""Gibbs rate families built from an affine potential"""

import logging
from typing import Optional

import numpy as np
from scipy.special import softmax

from core.errors import NotIrreducible
from core.rates import Potential, RateFamily, check_irreducible, with_diagonal
from models.spec import GibbsAffineSpec

logger = logging.getLogger("lyapunov_toolkit.models.gibbs")


def complete_adjacency(d: int) -> np.ndarray:
    return np.ones((d, d)) - np.eye(d)


def resolve_adjacency(adjacency: Optional[list], d: int) -> np.ndarray:
    """Adjacency matrix alpha(x, y); the complete graph when unset"""
    matrix = complete_adjacency(d) if adjacency is None else np.array(adjacency, dtype=float)
    if not check_irreducible(matrix - np.diag(matrix.sum(axis=1))):
        raise NotIrreducible("Adjacency graph is not connected")
    return matrix


def metropolis_rates(energies: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    """Gamma_xy = exp(-(E_y - E_x)^+) alpha(x, y)"""
    barrier = np.maximum(energies[None, :] - energies[:, None], 0.0)
    return with_diagonal(np.exp(-barrier) * adjacency)


def gibbs_law(energies: np.ndarray) -> np.ndarray:
    """pi proportional to exp(-E)"""
    return softmax(-energies)


class GibbsAffine:
    """K^x(p) = V_x + beta (W p)_x, so that H(p) = V + 2 beta W p"""

    def __init__(self, V: np.ndarray, W: np.ndarray, beta: float, adjacency: np.ndarray):
        self.V = np.asarray(V, dtype=float)
        self.W = np.asarray(W, dtype=float)
        self.beta = float(beta)
        self.adjacency = adjacency

    @classmethod
    def from_spec(cls, spec: GibbsAffineSpec) -> "GibbsAffine":
        d = len(spec.V)
        return cls(spec.V, spec.W, spec.beta, resolve_adjacency(spec.adjacency, d))

    def K(self, p: np.ndarray) -> np.ndarray:
        return self.V + self.beta * (self.W @ p)

    def H(self, p: np.ndarray) -> np.ndarray:
        return self.V + 2.0 * self.beta * (self.W @ p)

    def potential_value(self, p: np.ndarray) -> float:
        """sum_z K^z(p) p_z"""
        return float(self.V @ p + self.beta * p @ self.W @ p)

    def rates(self, p: np.ndarray) -> np.ndarray:
        return metropolis_rates(self.H(p), self.adjacency)

    def stationary(self, p: np.ndarray) -> np.ndarray:
        return gibbs_law(self.H(p))

    def family(self, spec, label: str) -> RateFamily:
        return RateFamily(
            spec=spec,
            dimension=self.V.size,
            rates=self.rates,
            label=label,
            stationary=self.stationary,
            potential=Potential(value=self.potential_value, gradient=self.H, label="sum_z K^z r_z"),
            locally_gibbs=True,
            free_energy_fields=self.K,
        )


def build_gibbs_affine(spec: GibbsAffineSpec) -> RateFamily:
    model = GibbsAffine.from_spec(spec)
    logger.info(f"GibbsAffine model with d={model.V.size}, beta={model.beta}")
    return model.family(spec, f"GibbsAffine(d={model.V.size}, beta={model.beta:g})")
