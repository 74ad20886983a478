import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from core.errors import BoundaryProximity, InvalidInput, InvalidParameters
from core.simplex import (
    SimplexPoint,
    TangentVector,
    grid_with_at_least,
    helmert_basis,
    interior_grid,
    lattice_counts,
    random_interior,
    tangent_gradient,
    tangent_project,
)
from tools.rng import stream

probability_vectors = st.integers(min_value=2, max_value=7).flatmap(
    lambda d: st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=d, max_size=d)
).map(lambda w: np.array(w) / np.sum(w))


def test_point_clamps_roundoff_negatives():
    point = SimplexPoint([0.5 + 5e-13, 0.5, -5e-13])
    assert point.min_coordinate == 0.0
    assert point.weights.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("weights", [[0.5, 0.6], [1.1, -0.1], [0.5, np.nan, 0.5], []])
def test_point_rejects_off_simplex(weights):
    with pytest.raises(InvalidInput):
        SimplexPoint(weights)


def test_point_is_read_only():
    point = SimplexPoint([0.25, 0.75])
    with pytest.raises(ValueError):
        point.weights[0] = 0.5


@given(probability_vectors)
def test_point_construction_is_idempotent(weights):
    once = SimplexPoint(weights)
    twice = SimplexPoint(once.weights)
    assert_allclose(once.weights, twice.weights, atol=1e-15)


def test_tangent_vector_requires_zero_sum():
    TangentVector([1.0, -1.0, 0.0])
    with pytest.raises(InvalidInput):
        TangentVector([1.0, 0.0])


@given(st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=8))
def test_tangent_projection_is_idempotent(values):
    once = tangent_project(values)
    twice = tangent_project(once)
    assert abs(once.components.sum()) < 1e-9
    assert_allclose(once.components, twice.components, atol=1e-9)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_helmert_basis_is_orthonormal_and_tangent(d):
    basis = helmert_basis(d)
    assert basis.shape == (d - 1, d)
    assert_allclose(basis @ basis.T, np.eye(d - 1), atol=1e-14)
    assert_allclose(basis.sum(axis=1), 0.0, atol=1e-14)


def test_interior_grid_respects_margin():
    grid = interior_grid(2, 10, 0.15)
    # k = 2..8 out of 10
    assert len(grid) == 7
    assert min(p.min_coordinate for p in grid) == pytest.approx(0.2)


def test_interior_grid_three_states():
    grid = interior_grid(3, 10, 0.02)
    assert len(grid) == 36
    assert all(p.is_interior(0.02) for p in grid)


def test_interior_grid_rejects_impossible_margin():
    with pytest.raises(InvalidParameters):
        interior_grid(3, 10, 0.4)


def test_grid_with_at_least_reaches_count():
    grid = grid_with_at_least(3, 200, 0.02)
    assert len(grid) >= 200
    assert len(interior_grid(3, grid.resolution - 1, 0.02)) < 200


def test_lattice_counts():
    counts = lattice_counts(20, 3)
    assert counts.shape == (231, 3)
    assert (counts.sum(axis=1) == 20).all()
    assert len({tuple(row) for row in counts}) == 231


@given(probability_vectors, st.integers(min_value=0, max_value=2 ** 32))
@settings(max_examples=30)
def test_tangent_gradient_of_linear_function(point, seed):
    c = stream(seed).standard_normal(point.size)
    r = 0.5 * point + 0.5 / point.size
    gradient = tangent_gradient(lambda x: float(c @ x), r)
    assert_allclose(gradient.components, c - c.mean(), atol=1e-8)


@pytest.mark.parametrize("d", [2, 3])
def test_entropy_gradient_vanishes_at_barycenter(d):
    gradient = tangent_gradient(lambda x: float(x @ np.log(x)), np.full(d, 1.0 / d))
    assert_allclose(gradient.components, 0.0, atol=1e-9)


def test_tangent_gradient_ignores_additive_constants():
    def f(x):
        return float(x @ np.log(x) + np.sin(3 * x[0]))

    r = np.array([0.2, 0.3, 0.5])
    plain = tangent_gradient(f, r, h=1e-3)
    shifted = tangent_gradient(lambda x: f(x) + 1.0, r, h=1e-3)
    assert_allclose(shifted.components, plain.components, atol=1e-10)


def test_tangent_gradient_is_second_order():
    pi = np.array([0.25, 0.25, 0.5])
    r = np.array([0.2, 0.3, 0.5])
    exact = tangent_project(np.log(r / pi) + 1.0).components

    def error(h):
        gradient = tangent_gradient(lambda x: float(x @ np.log(x / pi)), r, h=h)
        return np.linalg.norm(gradient.components - exact)

    coarse, fine = error(1e-2), error(5e-3)
    assert coarse / fine == pytest.approx(4.0, abs=0.5)
    assert np.log2(coarse / fine) >= 1.9


def test_tangent_gradient_refuses_boundary():
    with pytest.raises(BoundaryProximity):
        tangent_gradient(lambda x: float(x.sum()), [1.0 - 1e-6, 1e-6])


def test_random_interior_margin():
    rng = stream(4)
    samples = np.array([random_interior(4, rng, margin=0.05) for _ in range(200)])
    assert samples.min() >= 0.05
    assert_allclose(samples.sum(axis=1), 1.0, atol=1e-12)
