"""Catalog of nonlinear Markov rate families"""

import logging
from typing import Union

from pydantic import TypeAdapter

from core.rates import (
    Potential,
    RateFamily,
    check_irreducible,
    evaluate_rates,
    lipschitz_estimate,
    spot_check_stationary,
)
from models.birth_death import build_birth_death
from models.gibbs import build_gibbs_affine
from models.linear import build_linear
from models.metropolis import build_metropolis
from models.nearest_neighbor import build_nearest_neighbor
from models.non_locally_gibbs import build_non_locally_gibbs
from models.slow_adaptation import build_slow_adaptation
from models.spec import (
    BirthDeathPhiPsiSpec,
    GibbsAffineSpec,
    LinearSpec,
    MetropolisGGibbsSpec,
    ModelSpec,
    NearestNeighborCostSpec,
    NonLocallyGibbsSpec,
    SlowAdaptationSpec,
    TelecomSpec,
    ThreeStateBSpec,
    ThreeStateNonGibbsSpec,
)
from models.telecom import TelecomStateSpace, build_telecom
from models.three_state import build_three_state_b, build_three_state_non_gibbs

logger = logging.getLogger("lyapunov_toolkit.models")

_BUILDERS = {
    GibbsAffineSpec: build_gibbs_affine,
    BirthDeathPhiPsiSpec: build_birth_death,
    MetropolisGGibbsSpec: build_metropolis,
    ThreeStateBSpec: build_three_state_b,
    ThreeStateNonGibbsSpec: build_three_state_non_gibbs,
    NearestNeighborCostSpec: build_nearest_neighbor,
    TelecomSpec: build_telecom,
    NonLocallyGibbsSpec: build_non_locally_gibbs,
    LinearSpec: build_linear,
}

_SPEC_ADAPTER = TypeAdapter(ModelSpec)


def parse_model_spec(document: Union[dict, object]):
    """Validate a plain mapping into the matching ModelSpec variant"""
    if isinstance(document, dict):
        return _SPEC_ADAPTER.validate_python(document)
    return document


def build_model(spec) -> RateFamily:
    """Build the rate family for a spec (or a mapping with a 'variant' key)"""
    spec = parse_model_spec(spec)
    if isinstance(spec, SlowAdaptationSpec):
        model = build_slow_adaptation(spec, build_model)
    else:
        model = _BUILDERS[type(spec)](spec)
    spot_check_stationary(model)
    logger.debug(f"Built {model.label}")
    return model


__all__ = [
    "ModelSpec",
    "Potential",
    "RateFamily",
    "TelecomStateSpace",
    "build_model",
    "check_irreducible",
    "evaluate_rates",
    "lipschitz_estimate",
    "parse_model_spec",
]
