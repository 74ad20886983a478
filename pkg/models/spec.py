"""Configuration schema of every model variant"""

from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


def _check_adjacency(adjacency: Optional[List[List[int]]], d: int) -> None:
    if adjacency is None:
        return
    matrix = np.array(adjacency)
    if matrix.shape != (d, d):
        raise ValueError(f"adjacency must be {d}x{d}, got {matrix.shape}")
    if not np.isin(matrix, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if not (matrix == matrix.T).all():
        raise ValueError("adjacency must be symmetric")
    if np.diag(matrix).any():
        raise ValueError("adjacency must have a zero diagonal")


class GibbsAffineSpec(_Spec):
    """K^x(p) = V_x + beta (W p)_x with symmetric W"""

    variant: Literal["GibbsAffine"] = "GibbsAffine"
    V: List[float] = Field(min_length=2)
    W: List[List[float]]
    beta: float = Field(ge=0.0)
    adjacency: Optional[List[List[int]]] = None

    @model_validator(mode="after")
    def _check(self):
        d = len(self.V)
        W = np.array(self.W, dtype=float)
        if W.shape != (d, d):
            raise ValueError(f"W must be {d}x{d}, got {W.shape}")
        if not np.allclose(W, W.T, atol=0.0, rtol=0.0):
            raise ValueError("W must be symmetric")
        _check_adjacency(self.adjacency, d)
        return self


class SlowAdaptationSpec(_Spec):
    variant: Literal["SlowAdaptation"] = "SlowAdaptation"
    base: "ModelSpec"
    pi_star: List[float] = Field(min_length=2)
    lambda_: float = Field(alias="lambda", ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check(self):
        pi = np.array(self.pi_star)
        if pi.min() < 0 or abs(pi.sum() - 1.0) > 1e-9:
            raise ValueError("pi_star must be a probability vector")
        return self


class BirthDeathPhiPsiSpec(_Spec):
    """Up rates psi_i(r) phi_i(r_i), down rates psi_{i-1}(r) phi_i(r_i)"""

    variant: Literal["BirthDeathPhiPsi"] = "BirthDeathPhiPsi"
    psi: List[str] = Field(min_length=1, description="d-1 positive expressions in r1..rd")
    phi: List[str] = Field(min_length=2, description="d positive expressions in w")

    @model_validator(mode="after")
    def _check(self):
        if len(self.psi) != len(self.phi) - 1:
            raise ValueError(f"psi needs {len(self.phi) - 1} entries for {len(self.phi)} states")
        return self


class MetropolisGGibbsSpec(_Spec):
    variant: Literal["MetropolisGGibbs"] = "MetropolisGGibbs"
    K: List[str] = Field(min_length=2, description="d expressions in r1..rd")
    R: List[str] = Field(min_length=2, description="d expressions in w")
    adjacency: Optional[List[List[int]]] = None

    @model_validator(mode="after")
    def _check(self):
        if len(self.K) != len(self.R):
            raise ValueError("K and R must have the same length")
        _check_adjacency(self.adjacency, len(self.K))
        return self


class _ThreeStateParameters(_Spec):
    a1: PositiveFloat
    a2: PositiveFloat
    b2: PositiveFloat
    b3: PositiveFloat
    kappa: float
    c: List[float] = Field(min_length=3, max_length=3)
    r_star: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_r_star(self):
        if self.r_star is not None:
            r = np.array(self.r_star)
            if r.size != 3 or r.min() < 0 or abs(r.sum() - 1.0) > 1e-9:
                raise ValueError("r_star must be a probability vector on 3 states")
        return self


class ThreeStateBSpec(_ThreeStateParameters):
    variant: Literal["ThreeStateB"] = "ThreeStateB"


class ThreeStateNonGibbsSpec(_ThreeStateParameters):
    variant: Literal["ThreeStateNonGibbs"] = "ThreeStateNonGibbs"

    @model_validator(mode="after")
    def _check_costs(self):
        if self.c[1] != self.c[2]:
            raise ValueError("ThreeStateNonGibbs requires c2 == c3")
        return self


class NearestNeighborCostSpec(_Spec):
    """Birth-death chain with rates a^i, b^{i+1} evaluated at <r, c^i>"""

    variant: Literal["NearestNeighborCost"] = "NearestNeighborCost"
    a: List[str] = Field(min_length=1, description="d-1 positive expressions in w")
    b: List[str] = Field(min_length=1, description="d-1 positive expressions in w")

    @model_validator(mode="after")
    def _check(self):
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have the same length")
        return self


class TelecomSpec(_Spec):
    variant: Literal["Telecom"] = "Telecom"
    C: PositiveInt
    lambdas: List[PositiveFloat] = Field(min_length=1)
    mus: List[PositiveFloat] = Field(min_length=1)
    gammas: List[PositiveFloat] = Field(min_length=1)
    A: List[PositiveInt] = Field(min_length=1)

    @model_validator(mode="after")
    def _check(self):
        lengths = {len(self.lambdas), len(self.mus), len(self.gammas), len(self.A)}
        if len(lengths) != 1:
            raise ValueError("lambdas, mus, gammas and A must have one entry per class")
        return self

    @property
    def M(self) -> int:
        return len(self.A)


class NonLocallyGibbsSpec(_Spec):
    variant: Literal["NonLocallyGibbs"] = "NonLocallyGibbs"
    a1: str = Field(description="expression in r1..r3 with values in (0, 1)")
    a2: str = Field(description="expression in r1..r3 with values in (0, 1)")
    psi: str = Field(description="expression in w with values in (0, 1)")


class LinearSpec(_Spec):
    """Constant rate matrix (a linear Markov chain)"""

    variant: Literal["Linear"] = "Linear"
    gamma: List[List[float]]

    @model_validator(mode="after")
    def _check(self):
        gamma = np.array(self.gamma, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] < 2:
            raise ValueError("gamma must be a square matrix of size at least 2")
        return self


ModelSpec = Annotated[
    Union[
        GibbsAffineSpec,
        SlowAdaptationSpec,
        BirthDeathPhiPsiSpec,
        MetropolisGGibbsSpec,
        ThreeStateBSpec,
        ThreeStateNonGibbsSpec,
        NearestNeighborCostSpec,
        TelecomSpec,
        NonLocallyGibbsSpec,
        LinearSpec,
    ],
    Field(discriminator="variant"),
]

SlowAdaptationSpec.model_rebuild()
