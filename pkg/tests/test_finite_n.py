import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from core.dynamics import integrate_ode
from core.errors import InvalidInput, StepTooLarge, TooLarge, ZeroMass
from core.finite_n import (
    InitialCondition,
    build_lattice_chain,
    evolve_distribution,
    gillespie_simulate,
    iid_distribution,
    lattice_distribution,
    lattice_size,
    point_mass,
    rate_estimate,
    scaled_relative_entropy,
    simulate_replicas,
    stationary_of_chain,
    sup_deviation,
)
from core.lyapunov import gibbs_free_energy, relative_entropy
from models import build_model

from conftest import curie_weiss_spec


@pytest.fixture
def constant_rates():
    return build_model({"variant": "Linear", "gamma": [[-1.0, 1.0], [2.0, -2.0]]})


CONSTANT_PI = np.array([2.0, 1.0]) / 3.0


def test_lattice_sizes(catalog):
    chain = build_lattice_chain(build_model(curie_weiss_spec(0.5)), 10)
    assert len(chain) == 11 == lattice_size(10, 2)
    dense = chain.generator.toarray()
    assert np.all(np.triu(dense, 2) == 0) and np.all(np.tril(dense, -2) == 0)

    chain = build_lattice_chain(catalog["GibbsAffine3"], 20)
    assert len(chain) == 231
    dense = chain.generator.toarray()
    assert np.abs(dense.sum(axis=1)).max() <= 1e-12
    off = dense[~np.eye(len(chain), dtype=bool)]
    assert off.min() >= 0


def test_generator_moves_one_particle(catalog):
    chain = build_lattice_chain(catalog["GibbsAffine3"], 6)
    dense = chain.generator.toarray()
    for i, j in zip(*np.nonzero(dense)):
        if i != j:
            step = chain.states[j] - chain.states[i]
            assert sorted(step.tolist()) == [-1, 0, 1]


def test_two_particle_rate():
    model = build_model(curie_weiss_spec(2.0))
    chain = build_lattice_chain(model, 2)
    source, target = chain.index[(1, 1)], chain.index[(0, 2)]
    assert chain.generator[source, target] == pytest.approx(model.rates(np.array([0.5, 0.5]))[0, 1])


def test_lattice_guard(catalog):
    with pytest.raises(TooLarge):
        build_lattice_chain(catalog["Telecom"], 100)


def test_constant_rates_give_product_form(constant_rates):
    chain = build_lattice_chain(constant_rates, 50)
    stationary = stationary_of_chain(chain)
    product = stats.multinomial.pmf(chain.states, 50, CONSTANT_PI)
    assert_allclose(stationary.mass, product, atol=1e-10)


def test_single_particle_chain():
    model = build_model(curie_weiss_spec(2.0))
    chain = build_lattice_chain(model, 1)
    down = model.rates(np.array([1.0, 0.0]))[0, 1]
    up = model.rates(np.array([0.0, 1.0]))[1, 0]
    stationary = stationary_of_chain(chain)
    assert stationary.mass[chain.index[(1, 0)]] == pytest.approx(up / (up + down), abs=1e-12)


def interior_error(estimate, reference, margin=0.05):
    inside = estimate.points.min(axis=1) >= margin
    return np.abs(estimate.values[inside] - reference[inside]).max()


def test_rate_estimate_approaches_relative_entropy(constant_rates):
    errors = []
    for n in (50, 200):
        estimate = rate_estimate(stationary_of_chain(build_lattice_chain(constant_rates, n)))
        assert estimate.missing == 0 and estimate.values.min() == 0.0
        reference = np.array([relative_entropy(q, CONSTANT_PI) for q in estimate.points])
        errors.append(interior_error(estimate, reference))
    assert errors[1] < errors[0]


def test_rate_estimate_approaches_free_energy():
    model = build_model(curie_weiss_spec(0.5))
    errors = []
    for n in (50, 200):
        estimate = rate_estimate(stationary_of_chain(build_lattice_chain(model, n)))
        inside = estimate.points.min(axis=1) >= 0.05
        free = np.array([gibbs_free_energy(model.free_energy_fields, q) if m else 0.0
                         for q, m in zip(estimate.points, inside)])
        free = free - free[inside].min()
        errors.append(interior_error(estimate, free))
    assert errors[1] < errors[0]


@pytest.mark.parametrize("n", [50, 100, 200])
def test_rate_estimate_minimum_at_fixed_point(n):
    chain = build_lattice_chain(build_model(curie_weiss_spec(0.5)), n)
    estimate = rate_estimate(stationary_of_chain(chain))
    assert int(np.argmin(estimate.values)) == chain.locate([0.5, 0.5])


def test_point_mass_rate_estimate():
    chain = build_lattice_chain(build_model(curie_weiss_spec(0.5)), 10)
    u = point_mass(chain, [0.9, 0.1])
    estimate = rate_estimate(u)
    assert estimate.missing == 10
    assert_allclose(estimate.points, [[0.9, 0.1]])
    assert estimate.values.tolist() == [0.0]
    with pytest.raises(ZeroMass):
        rate_estimate(u, strict=True)


def test_evolution_follows_the_ode():
    model = build_model(curie_weiss_spec(0.5))
    chain = build_lattice_chain(model, 50)
    u = evolve_distribution(chain, point_mass(chain, [0.9, 0.1]), 3.0)
    p = integrate_ode(model, [0.9, 0.1], 3.0, 1e-3).final
    assert np.abs(u.mean() - p).sum() <= 0.02
    assert u.time == 3.0


def test_rk4_and_uniformization_agree():
    chain = build_lattice_chain(build_model(curie_weiss_spec(2.0)), 20)
    u0 = point_mass(chain, [0.8, 0.2])
    rk4 = evolve_distribution(chain, u0, 0.5, dt=0.01 / chain.max_rate, method="rk4")
    uniform = evolve_distribution(chain, u0, 0.5, method="uniformization")
    assert_allclose(rk4.mass, uniform.mass, atol=1e-7)


def test_evolution_keeps_stationary_law(catalog):
    chain = build_lattice_chain(catalog["GibbsAffine3"], 12)
    stationary = stationary_of_chain(chain)
    evolved = evolve_distribution(chain, stationary, 5.0)
    assert_allclose(evolved.mass, stationary.mass, atol=1e-10)
    assert evolve_distribution(chain, stationary, 0.0) is stationary


def test_evolution_step_guard(constant_rates):
    chain = build_lattice_chain(constant_rates, 10)
    with pytest.raises(StepTooLarge):
        evolve_distribution(chain, point_mass(chain, [0.5, 0.5]), 1.0, dt=1.0, method="rk4")


def test_lattice_distribution_validation(constant_rates):
    chain = build_lattice_chain(constant_rates, 4)
    u = lattice_distribution(chain, {(4, 0): 0.25, (2, 2): 0.75})
    assert_allclose(u.mean(), [0.625, 0.375])
    with pytest.raises(InvalidInput):
        lattice_distribution(chain, {(4, 0): 0.5})
    with pytest.raises(InvalidInput):
        lattice_distribution(chain, {(5, 0): 1.0})


def test_scaled_entropy_of_product_law(catalog):
    chain = build_lattice_chain(catalog["GibbsAffine3"], 20)
    q = np.array([0.2, 0.35, 0.45])
    assert scaled_relative_entropy(q, iid_distribution(chain, q)) == pytest.approx(0.0, abs=1e-12)


def test_scaled_entropy_single_particle(catalog):
    chain = build_lattice_chain(catalog["GibbsAffine3"], 1)
    u = lattice_distribution(chain, {(1, 0, 0): 0.5, (0, 1, 0): 0.25, (0, 0, 1): 0.25})
    q = np.array([0.2, 0.3, 0.5])
    assert scaled_relative_entropy(q, u) == pytest.approx(relative_entropy(q, u.mean()), abs=1e-12)


def test_scaled_entropy_against_stationary_product(constant_rates):
    n = 100
    stationary = stationary_of_chain(build_lattice_chain(constant_rates, n))
    for q in ([0.3, 0.7], [0.45, 0.55], [0.6, 0.4], [0.8, 0.2], [0.92, 0.08]):
        gap = abs(scaled_relative_entropy(q, stationary) - relative_entropy(q, CONSTANT_PI))
        assert gap <= 5 * np.log(n) / n


def test_scaled_entropy_needs_support(constant_rates):
    chain = build_lattice_chain(constant_rates, 10)
    with pytest.raises(ZeroMass):
        scaled_relative_entropy([0.5, 0.5], point_mass(chain, [0.5, 0.5]))


def test_gillespie_holding_times():
    one_way = build_model({"variant": "Linear", "gamma": [[-1.0, 1.0], [0.0, 0.0]]})
    n = 10_000
    path = gillespie_simulate(one_way, n, InitialCondition("point", (1.0, 0.0)), 1e6, seed=11)
    assert len(path.jump_times) == n + 1
    assert_allclose(path.states[-1], [0.0, 1.0])
    # the k-th holding time is Exp(n - k), so rescaling makes them Exp(1)
    scaled = np.diff(path.jump_times) * (n - np.arange(n))
    assert abs(scaled.mean() - 1.0) <= 3.0 / np.sqrt(n)


def test_gillespie_paths_are_reproducible():
    model = build_model(curie_weiss_spec(0.5))
    initial = InitialCondition("iid", (0.9, 0.1))
    first = gillespie_simulate(model, 200, initial, 1.0, seed=5, replica=3)
    again = gillespie_simulate(model, 200, initial, 1.0, seed=5, replica=3)
    other = gillespie_simulate(model, 200, initial, 1.0, seed=5, replica=4)
    assert np.array_equal(first.rows(), again.rows())
    assert not np.array_equal(first.jump_times, other.jump_times) or not np.array_equal(first.states, other.states)
    assert np.all(np.diff(first.jump_times) > 0)
    steps = np.abs(np.diff(first.states, axis=0)).sum(axis=1)
    assert_allclose(steps, 2.0 / 200)


def test_gillespie_from_lattice_law(constant_rates):
    chain = build_lattice_chain(constant_rates, 8)
    law = lattice_distribution(chain, {(8, 0): 1.0})
    path = gillespie_simulate(constant_rates, 8, InitialCondition("lattice", law=law), 0.5, seed=0)
    assert_allclose(path.states[0], [1.0, 0.0])


def deviations(model, n, trajectory, replicas=100, jobs=4):
    initial = InitialCondition("iid", (0.9, 0.1))
    paths = simulate_replicas(model, n, initial, 2.0, seed=2024, replicas=replicas, jobs=jobs)
    return np.array([sup_deviation(path, trajectory) for path in paths])


@pytest.mark.slow
def test_propagation_of_chaos():
    model = build_model(curie_weiss_spec(0.5))
    trajectory = integrate_ode(model, [0.9, 0.1], 2.0, 1e-3)
    small = deviations(model, 1000, trajectory)
    assert np.count_nonzero(small <= 0.1) >= 95
    large = deviations(model, 4000, trajectory)
    assert 1.6 <= np.median(small) / np.median(large) <= 2.6
