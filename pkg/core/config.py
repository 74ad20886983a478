"""Experiment configuration schema and loader"""

import json
import logging
from enum import Enum
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.spec import ModelSpec

logger = logging.getLogger("lyapunov_toolkit.core.config")

SCHEMA_VERSION = "1"


class ToleranceProfile(str, Enum):
    STRICT = "strict"
    FD = "fd"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSettings(_Section):
    """Interior grid: either an explicit resolution or the smallest grid with min_points points"""

    resolution: Optional[int] = Field(default=None, ge=1)
    min_points: int = Field(default=200, ge=1)
    margin: float = Field(default=0.02, ge=0.0, lt=0.5)


class CandidateSettings(_Section):
    """Which J to test

    model: entropy + the model's own potential; free_energy: F from the Gibbs
    fields; relative_entropy: R(.||pi_star); zero: J = 0; expression: a
    closed-form J(r1..rd).
    """

    kind: Literal["model", "free_energy", "relative_entropy", "zero", "expression"] = "model"
    expression: Optional[str] = None
    pi_star: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "expression" and not self.expression:
            raise ValueError("candidate kind 'expression' needs an expression")
        return self


class OdeSettings(_Section):
    p0: Optional[List[float]] = None
    t_end: float = Field(default=20.0, ge=0.0)
    dt: float = Field(default=1e-3, gt=0.0)


class FixedPointSettings(_Section):
    multistarts: int = Field(default=20, ge=1)


class StationarySettings(_Section):
    points: Optional[List[List[float]]] = None
    grid: GridSettings = Field(default_factory=lambda: GridSettings(resolution=10))
    cross_check: bool = True


class DescentSettings(_Section):
    starts: int = Field(default=20, ge=1)
    dt: float = Field(default=1e-3, gt=0.0)
    t_end: float = Field(default=20.0, gt=0.0)
    eps: float = Field(default=1e-4, gt=0.0)
    stride: int = Field(default=10, ge=1)
    margin: float = Field(default=0.05, ge=0.0, lt=0.5)
    candidate: CandidateSettings = Field(default_factory=CandidateSettings)
    probe_radius: float = Field(default=0.05, gt=0.0)
    probe_samples: int = Field(default=500, ge=1)


class SubsolutionSettings(_Section):
    grid: GridSettings = Field(default_factory=GridSettings)
    candidate: CandidateSettings = Field(default_factory=CandidateSettings)


class DualitySettings(_Section):
    samples: int = 50
    primal_samples: int = Field(default=25, ge=0)
    alpha_scale: float = Field(default=1.0, gt=0.0)


class ConcavitySettings(_Section):
    r: Optional[List[float]] = None
    alpha: Optional[List[float]] = None
    w: Optional[List[float]] = None
    rho_min: float = -2.0
    rho_max: float = 2.0
    points: int = Field(default=41, ge=3)

    @model_validator(mode="after")
    def _check(self):
        if self.rho_max <= self.rho_min:
            raise ValueError("rho_max must exceed rho_min")
        return self


class PotentialTestSettings(_Section):
    grid: GridSettings = Field(default_factory=lambda: GridSettings(resolution=12, margin=0.05))
    h: float = Field(default=1e-4, gt=0.0)
    reconstruct: bool = True


class SlowAdaptationSettings(_Section):
    pi_star: Optional[List[float]] = None
    lipschitz_samples: int = Field(default=200, ge=2)
    grid: GridSettings = Field(default_factory=GridSettings)
    bisection_tolerance: float = Field(default=1e-3, gt=0.0)


class InitialSettings(_Section):
    kind: Literal["iid", "point"] = "iid"
    q: Optional[List[float]] = None


class FiniteNSettings(_Section):
    n: int = Field(default=50, ge=1)
    t: float = Field(default=1.0, ge=0.0)
    dt: Optional[float] = Field(default=None, gt=0.0)
    method: Literal["auto", "rk4", "uniformization"] = "auto"
    initial: InitialSettings = Field(default_factory=lambda: InitialSettings(kind="point"))
    stationary: bool = True


class ParticleSettings(_Section):
    n: int = Field(default=1000, ge=1)
    replicas: int = Field(default=100, ge=1)
    t_end: float = Field(default=2.0, gt=0.0)
    ode_dt: float = Field(default=1e-3, gt=0.0)
    initial: InitialSettings = Field(default_factory=InitialSettings)
    threshold: float = Field(default=0.1, gt=0.0)


class LandscapeSettings(_Section):
    grid: GridSettings = Field(default_factory=lambda: GridSettings(resolution=20))
    candidate: CandidateSettings = Field(default_factory=CandidateSettings)


class ExperimentConfig(_Section):
    """Complete experiment document; every section except model has defaults"""

    schema_version: str = SCHEMA_VERSION
    model: ModelSpec
    seed: int = Field(default=0, ge=0, le=2 ** 64 - 1)
    jobs: Optional[int] = Field(default=None, ge=1)
    output_dir: str = "out"
    tolerance_profile: ToleranceProfile = ToleranceProfile.STRICT
    ode: OdeSettings = Field(default_factory=OdeSettings)
    fixed_points: FixedPointSettings = Field(default_factory=FixedPointSettings)
    stationary: StationarySettings = Field(default_factory=StationarySettings)
    descent: DescentSettings = Field(default_factory=DescentSettings)
    subsolution: SubsolutionSettings = Field(default_factory=SubsolutionSettings)
    duality: DualitySettings = Field(default_factory=DualitySettings)
    concavity: ConcavitySettings = Field(default_factory=ConcavitySettings)
    potential_test: PotentialTestSettings = Field(default_factory=PotentialTestSettings)
    slow_adaptation: SlowAdaptationSettings = Field(default_factory=SlowAdaptationSettings)
    finite_n: FiniteNSettings = Field(default_factory=FiniteNSettings)
    particles: ParticleSettings = Field(default_factory=ParticleSettings)
    landscape: LandscapeSettings = Field(default_factory=LandscapeSettings)

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, value: str) -> str:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value!r}, expected {SCHEMA_VERSION!r}")
        return value


def load_config(config_path: str) -> ExperimentConfig:
    """Load and validate a YAML or JSON experiment file"""
    with open(config_path, "r", encoding="utf-8") as file:
        document = yaml.safe_load(file)
    if not isinstance(document, dict):
        raise ValueError(f"{config_path} does not contain a mapping")
    config = ExperimentConfig.model_validate(document)
    logger.info(f"Configuration loaded from {config_path}")
    return config


def apply_overrides(config: ExperimentConfig, seed: Optional[int] = None, jobs: Optional[int] = None,
                    output_dir: Optional[str] = None, tolerance_profile: Optional[str] = None) -> ExperimentConfig:
    """Flags win over file values"""
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if jobs is not None:
        updates["jobs"] = jobs
    if output_dir is not None:
        updates["output_dir"] = output_dir
    if tolerance_profile is not None:
        updates["tolerance_profile"] = ToleranceProfile(tolerance_profile)
    if not updates:
        return config
    return ExperimentConfig.model_validate({**config.model_dump(by_alias=True), **{
        k: (v.value if isinstance(v, Enum) else v) for k, v in updates.items()
    }})


def config_schema() -> dict:
    schema = ExperimentConfig.model_json_schema(by_alias=True)
    schema["$comment"] = f"schema_version {SCHEMA_VERSION}"
    return schema


def write_schema(path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_schema(), f, sort_keys=True, indent=2)
        f.write("\n")
    return path
