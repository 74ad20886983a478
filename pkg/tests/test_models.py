import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy import integrate

from core.dynamics import frozen_stationary
from core.errors import InvalidParameters, NotIrreducible
from core.rates import (
    RateFamily,
    check_irreducible,
    is_reversible,
    lipschitz_estimate,
    spot_check_stationary,
    validate_rate_matrix,
)
from core.simplex import random_interior
from models import TelecomStateSpace, build_model, parse_model_spec
from models.spec import GibbsAffineSpec, SlowAdaptationSpec
from tools.rng import stream

from conftest import curie_weiss_spec


def sample_points(d, count=10, seed=11, margin=0.02):
    rng = stream(seed)
    return [random_interior(d, rng, margin=margin) for _ in range(count)]


def test_catalog_rates_are_generators(catalog):
    for name, model in catalog.items():
        for r in sample_points(model.dimension):
            validate_rate_matrix(model.rates(r))


def test_catalog_stationary_matches_linear_solve(catalog):
    for name, model in catalog.items():
        for r in sample_points(model.dimension, count=5):
            assert_allclose(model.stationary(r), frozen_stationary(model, r), atol=1e-10, err_msg=name)


def test_locally_gibbs_identity(catalog):
    """log pi_y - log pi_x = -(dU/dr_y - dU/dr_x)"""
    for name, model in catalog.items():
        if not model.locally_gibbs:
            continue
        for r in sample_points(model.dimension, count=5):
            log_pi = np.log(model.stationary(r))
            gradient = model.potential.gradient(r)
            assert_allclose(log_pi - log_pi[0], -(gradient - gradient[0]), atol=1e-9, err_msg=name)


def test_non_locally_gibbs_is_flagged(catalog):
    assert not catalog["NonLocallyGibbs"].locally_gibbs
    assert catalog["NonLocallyGibbs"].has_potential


def test_curie_weiss_rates():
    model = build_model(curie_weiss_spec(2.0))
    r = np.array([0.3, 0.7])
    # H = 2 beta W r = (4 * 0.7, 4 * 0.3)
    gamma = model.rates(r)
    assert gamma[1, 0] == pytest.approx(np.exp(-(2.8 - 1.2)))
    assert gamma[0, 1] == pytest.approx(1.0)
    assert model.potential.value(r) == pytest.approx(2 * 2.0 * 0.3 * 0.7)


def test_gibbs_spec_requires_symmetric_w():
    with pytest.raises(ValidationError):
        GibbsAffineSpec(V=[0.0, 0.0], W=[[0.0, 1.0], [0.5, 0.0]], beta=1.0)


def test_disconnected_adjacency_is_rejected():
    spec = {
        "variant": "GibbsAffine",
        "V": [0.0, 0.0, 0.0],
        "W": np.zeros((3, 3)).tolist(),
        "beta": 1.0,
        "adjacency": [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
    }
    with pytest.raises(NotIrreducible):
        build_model(spec)


@pytest.mark.parametrize("document", [
    {"variant": "Unknown"},
    {"variant": "ThreeStateNonGibbs", "a1": 1, "a2": 1, "b2": 1, "b3": 1, "kappa": 1, "c": [0, 1, 2]},
    {"variant": "BirthDeathPhiPsi", "psi": ["1"], "phi": ["1", "1", "1"]},
    {"variant": "Telecom", "C": 2, "lambdas": [1.0], "mus": [1.0, 2.0], "gammas": [1.0], "A": [1]},
    {"variant": "GibbsAffine", "V": [0, 0], "W": [[0, 1], [1, 0]], "beta": -1},
    {"variant": "Linear", "gamma": [[0.0]]},
])
def test_invalid_specs(document):
    with pytest.raises(ValidationError):
        parse_model_spec(document)


def test_telecom_single_class_enumeration():
    spec = {"variant": "Telecom", "C": 2, "lambdas": [1.5], "mus": [1.0], "gammas": [0.5], "A": [1]}
    model = build_model(spec)
    assert model.dimension == 3
    r = np.array([0.2, 0.5, 0.3])
    a = 0.5 + 2 * 0.3
    expected = np.array([
        [-(1.5 + 0.5 * a), 1.5 + 0.5 * a, 0.0],
        [1.5, -(1.5 + 1.5 + 0.5 * a), 1.5 + 0.5 * a],
        [0.0, 3.0, -3.0],
    ])
    assert_allclose(model.rates(r), expected, atol=1e-14)


def test_telecom_state_space_order():
    space = TelecomStateSpace.enumerate(3, [1, 2])
    assert space.states == ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (3, 0))


def test_telecom_potential_against_quadrature(catalog):
    model = catalog["Telecom"]
    spec = model.spec
    occupancy = TelecomStateSpace.enumerate(spec.C, list(spec.A)).as_array()
    lam, mu, gam = (np.array(v) for v in (spec.lambdas, spec.mus, spec.gammas))
    for r in sample_points(model.dimension, count=3):
        a = r @ occupancy
        static = r @ (np.array([sum(math.lgamma(k + 1) for k in x) for x in occupancy])
                      + occupancy @ np.log(mu + gam))
        integrals = sum(integrate.quad(lambda w, m=m: np.log(lam[m] + gam[m] * w), 0.0, a[m], epsabs=1e-13)[0]
                        for m in range(len(lam)))
        assert model.potential.value(r) == pytest.approx(static - integrals, abs=1e-10)


def test_nearest_neighbor_ratios(catalog):
    model = catalog["NearestNeighborCost"]
    r = np.array([0.2, 0.5, 0.3])
    pi = model.stationary(r)
    # u_1 = r2 + r3, u_2 = r3; psi^1 = (1 + w) / (1 + w^2), psi^2 = (2 - w) / 1.5
    assert pi[1] / pi[0] == pytest.approx(1.8 / (1 + 0.8 ** 2))
    assert pi[2] / pi[1] == pytest.approx(1.7 / 1.5)


def test_three_state_potential_only_when_costs_match():
    base = {"variant": "ThreeStateB", "a1": 1.0, "a2": 1.0, "b2": 1.0, "b3": 1.0, "kappa": 1.0}
    assert build_model({**base, "c": [0.0, 1.0, 1.0]}).has_potential
    assert not build_model({**base, "c": [0.0, 1.0, 0.0]}).has_potential


def test_non_locally_gibbs_range_check():
    spec = {"variant": "NonLocallyGibbs", "a1": "0.5 + r1", "a2": "0.5", "psi": "0.5"}
    with pytest.raises(InvalidParameters):
        build_model(spec)


def test_linear_reducible_chain_has_no_stationary_law():
    model = build_model({"variant": "Linear", "gamma": [[-1.0, 1.0], [0.0, 0.0]]})
    assert not model.has_stationary
    assert lipschitz_estimate(model) == 0.0


def test_linear_potential_gives_relative_entropy(catalog):
    model = catalog["Linear"]
    r = np.array([0.3, 0.7])
    entropy = float(r @ np.log(r))
    assert entropy + model.potential.value(r) == pytest.approx(float(r @ np.log(r / 0.5)))


def test_slow_adaptation_endpoints():
    base = curie_weiss_spec(2.0)
    pi_star = [0.5, 0.5]
    full = build_model({"variant": "SlowAdaptation", "base": base, "pi_star": pi_star, "lambda": 1.0})
    frozen = build_model({"variant": "SlowAdaptation", "base": base, "pi_star": pi_star, "lambda": 0.0})
    original = build_model(base)
    for r in sample_points(2, count=5):
        assert_allclose(full.rates(r), original.rates(r), atol=1e-14)
        assert_allclose(frozen.rates(r), original.rates(np.array(pi_star)), atol=1e-14)


def test_slow_adaptation_of_non_gibbs_base():
    base = {"variant": "ThreeStateB", "a1": 1.0, "a2": 2.0, "b2": 1.0, "b3": 1.0, "kappa": 1.0, "c": [0, 1, 0]}
    pi_star = build_model(base).stationary(np.full(3, 1 / 3))
    model = build_model({"variant": "SlowAdaptation", "base": base, "pi_star": pi_star.tolist(), "lambda": 0.5})
    assert model.has_stationary and not model.has_potential
    r = np.array([0.2, 0.3, 0.5])
    assert_allclose(model.rates(r), build_model(base).rates(pi_star + 0.5 * (r - pi_star)))


def test_slow_adaptation_alias_round_trip():
    spec = SlowAdaptationSpec.model_validate(
        {"variant": "SlowAdaptation", "base": curie_weiss_spec(1.0), "pi_star": [0.5, 0.5], "lambda": 0.3}
    )
    assert spec.lambda_ == 0.3
    assert spec.model_dump(by_alias=True)["lambda"] == 0.3


def test_spot_check_catches_wrong_stationary_law():
    gamma = np.array([[-1.0, 1.0], [2.0, -2.0]])
    model = RateFamily(spec=None, dimension=2, rates=lambda r: gamma, label="wrong",
                       stationary=lambda r: np.array([0.5, 0.5]))
    with pytest.raises(InvalidParameters):
        spot_check_stationary(model)


def test_lipschitz_estimate_needs_two_samples(catalog):
    with pytest.raises(InvalidParameters):
        lipschitz_estimate(catalog["GibbsAffine"], samples=1)


@pytest.mark.parametrize("name", ["GibbsAffine", "GibbsAffine3", "ThreeStateB", "MetropolisGGibbs"])
def test_gibbs_families_satisfy_detailed_balance(catalog, name):
    model = catalog[name]
    for r in sample_points(model.dimension, count=20, seed=5):
        pi = model.stationary(r)
        flux = pi[:, None] * model.rates(r)
        assert_allclose(flux, flux.T, atol=1e-10, err_msg=name)
        assert is_reversible(model.rates(r), pi)


def test_three_state_non_gibbs_breaks_detailed_balance_by_two(catalog):
    model = catalog["ThreeStateNonGibbs"]
    for r in sample_points(3, count=20, seed=6):
        gamma, pi = model.rates(r), model.stationary(r)
        assert gamma[0, 1] / gamma[1, 0] == pytest.approx(0.5 * pi[1] / pi[0], rel=1e-12)
        assert not is_reversible(gamma, pi)


def test_lipschitz_estimate_scales_with_adaptation_rate():
    base = {"variant": "ThreeStateB", "a1": 1.0, "a2": 2.0, "b2": 1.0, "b3": 1.0, "kappa": 1.0, "c": [0, 1, 0]}

    def estimate(lam):
        spec = {"variant": "SlowAdaptation", "base": base, "pi_star": [0.3, 0.3, 0.4], "lambda": lam}
        return lipschitz_estimate(build_model(spec))

    ratio = estimate(0.1) / estimate(0.05)
    assert 1.8 <= ratio <= 2.2


def test_curie_weiss_lipschitz_estimate_is_finite(catalog):
    assert 0.0 < lipschitz_estimate(catalog["GibbsAffine"]) < np.inf


def test_check_irreducible(two_state_walk):
    assert check_irreducible(two_state_walk)
    assert not check_irreducible(np.array([[0.0, 0.0], [1.0, -1.0]]))
    # 0 -> 1 -> 2 -> 0 is strongly connected without any reverse edge
    cycle = np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]])
    assert check_irreducible(cycle)
    assert not check_irreducible(np.zeros((3, 3)))


def test_non_locally_gibbs_range_check_samples_the_interior():
    # 0.5 at r1 in {0, 1/3, 1/2, 1} but above 1 for r1 near 0.75
    a1 = "0.5 + 40*r1*(r1 - 1/3)*(r1 - 0.5)*(1 - r1)"
    spec = {"variant": "NonLocallyGibbs", "a1": a1, "a2": "0.5", "psi": "0.5"}
    with pytest.raises(InvalidParameters):
        build_model(spec)
