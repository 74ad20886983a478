"""Structured records emitted by the analyses"""

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from core.simplex import SimplexPoint, TangentVector


class FixedPointClass(Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


class Verdict(Enum):
    SOLUTION = "Solution"
    SUBSOLUTION = "Subsolution"
    VIOLATION = "Violation"


def to_plain(value: Any) -> Any:
    """Convert report contents into JSON-ready builtins"""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)
                if not f.metadata.get("skip")}
    if isinstance(value, SimplexPoint):
        return value.to_list()
    if isinstance(value, TangentVector):
        return value.to_list()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


@dataclass
class FixedPointReport:
    point: SimplexPoint
    residual: float
    classification: FixedPointClass
    jacobian_spectrum: List[complex]

    def to_dict(self) -> Dict[str, Any]:
        return to_plain(self)


@dataclass
class DescentSample:
    t: float
    value: float
    orbital_derivative: float


@dataclass
class DescentReport:
    trajectory_label: str
    samples: List[DescentSample]
    violations: int
    epsilon_ball: float
    discrete_increases: int = 0
    max_orbital_derivative_outside_ball: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def rows(self) -> np.ndarray:
        return np.array([[s.t, s.value, s.orbital_derivative] for s in self.samples])

    def to_dict(self) -> Dict[str, Any]:
        summary = to_plain(self)
        summary.pop("samples")
        summary["sample_count"] = len(self.samples)
        return summary


@dataclass
class PositiveDefinitenessReport:
    passed: bool
    samples: int
    min_increment: float
    level_radii: List[float]
    witnesses: List[List[float]] = field(default_factory=list)

    @property
    def summary(self) -> str:
        return "consistent with positive definite" if self.passed else "not positive definite"

    def to_dict(self) -> Dict[str, Any]:
        data = to_plain(self)
        data["summary"] = self.summary
        return data


@dataclass
class PotentialTestReport:
    passed: bool
    max_asymmetry: float
    worst_point: SimplexPoint
    grid_size: int
    reconstructed: Optional[List[float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return to_plain(self)


@dataclass
class SlowAdaptationBoundReport:
    gamma_min: float
    pi_star_min: float
    lipschitz_C: float
    quadratic_c: float
    lambda_1: float
    lambda_2: float
    lipschitz_samples: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return to_plain(self)


@dataclass
class SubsolutionReport:
    grid_size: int
    min_value: float
    max_abs_value: float
    worst_point: SimplexPoint
    verdict: Verdict
    tolerance: float
    values: List[float] = field(default_factory=list, metadata={"skip": True})

    def to_dict(self) -> Dict[str, Any]:
        return to_plain(self)


@dataclass
class DualityReport:
    samples: int
    max_roundtrip_error: float
    max_dual1_error: float
    max_primal_gap: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return to_plain(self)


@dataclass
class ConcavityReport:
    rho: List[float]
    values: List[float]
    second_differences: List[float]
    analytic_second_derivative: List[float]
    max_second_difference: float
    max_fd_gap: float
    concave: bool
    strict_expected: bool
    strictly_concave: bool

    @property
    def passed(self) -> bool:
        return self.concave and (self.strictly_concave or not self.strict_expected)

    def to_dict(self) -> Dict[str, Any]:
        data = to_plain(self)
        data["passed"] = self.passed
        return data
