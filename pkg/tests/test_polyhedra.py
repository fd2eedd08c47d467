import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupledro import polyhedra as ph
from coupledro.errors import DimensionMismatch, EmptyCoupledSet, EmptyInterior
from oracles import max_over_polytope_and_ball, polytope_vertices


def random_polytope(rng, d):
    """Box [-2, 2]^d cut by a few random rows that keep the origin inside."""
    k = int(rng.integers(1, 5))
    A = np.vstack([np.eye(d), -np.eye(d), rng.normal(size=(k, d))])
    b = np.concatenate([np.full(2 * d, 2.0), rng.uniform(0.3, 2.0, k)])
    return A, b


def spec_from_rows(A, b):
    d = A.shape[1]
    return ph.UncertaintySpec(d, ((0, d),), ((ph.Halfspaces(A, b),),), ())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 3))
def test_support_matches_vertex_maximum(seed, d):
    rng = np.random.default_rng(seed)
    A, b = random_polytope(rng, d)
    y = rng.normal(size=d)
    val, arg = ph.support_function(spec_from_rows(A, b), y)
    V = polytope_vertices(A, b)
    np.testing.assert_allclose(val, (V @ y).max(), atol=1e-9)
    assert (A @ arg - b).max() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4), st.floats(0.3, 3.0))
def test_support_with_ball_matches_slsqp(seed, d, radius):
    rng = np.random.default_rng(seed)
    A, b = random_polytope(rng, d)
    S = ph.UncertaintySpec(d, ((0, d),), ((ph.Halfspaces(A, b),),), (ph.L2Ball(radius),))
    y = rng.normal(size=d)
    val, arg = ph.support_function(S, y)
    ref = max_over_polytope_and_ball(A, b, radius, y, seed=seed % 1000)
    np.testing.assert_allclose(val, ref, atol=1e-6)
    assert np.linalg.norm(arg) <= radius * (1 + 1e-9)


def test_support_when_ball_does_not_bind_on_optimal_face():
    # the LP optimum returns a vertex outside the ball while part of the
    # optimal face lies inside it
    A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    b = np.array([1.0, 0.0, 1.0, 1.0])
    S = ph.UncertaintySpec(2, ((0, 2),), ((ph.Halfspaces(A, b),),), (ph.L2Ball(1.2),))
    val, arg = ph.support_function(S, np.array([1.0, 0.0]))
    np.testing.assert_allclose(val, 1.0, atol=1e-12)
    assert np.linalg.norm(arg) <= 1.2


def test_support_of_product_separates():
    S = ph.box_spec([0, -1], [2, 1])
    val, arg = ph.support_function(S, np.array([1.0, -3.0]))
    assert val == pytest.approx(5.0)
    np.testing.assert_allclose(arg, [2.0, -1.0])


def test_projection_support_matches_projected_vertices():
    rng = np.random.default_rng(11)
    for _ in range(15):
        A, b = random_polytope(rng, 3)
        P = ph.project(ph.Polyhedron(A, b), [0, 2])
        V = polytope_vertices(A, b)[:, [0, 2]]
        for _ in range(5):
            y = rng.normal(size=2)
            np.testing.assert_allclose(ph.support_function(P, y)[0], (V @ y).max(), atol=1e-8)


def test_gauge_and_membership():
    box = ph.box_spec([-1, -1], [1, 1])
    assert ph.gauge(box, [0.5, 0.25]) == pytest.approx(0.5)
    assert ph.membership(box, [1.0, -1.0]) and not ph.membership(box, [1.01, 0.0])
    ball = ph.UncertaintySpec(2, ((0, 2),), ((ph.L2Ball(2.0),),), ())
    assert ph.gauge(ball, [3.0, 4.0]) == pytest.approx(2.5)
    assert ph.max_scaling_of_point_into(np.array([3.0, 4.0]), ball) == pytest.approx(0.4)


def test_down_hull_membership():
    P = ph.Polyhedron(np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [1, 1]], dtype=float),
                      np.array([-0.5, 1.0, 0.0, 1.0, 1.5]))
    D = ph.down_hull(P)
    inside = ([0.0, 1.0], [0.2, 0.3], [1.0, 0.5], [0.0, 0.0])
    outside = ([1.0, 1.0], [0.0, 1.1], [-0.1, 0.0])
    for t in inside:
        assert ph.membership(D, t, 1e-9), t
    for t in outside:
        assert not ph.membership(D, t, 1e-9), t


def test_down_hull_with_ball_matches_definition():
    # lower bound 0.5 on u1 makes the set not down-closed
    S = ph.box_spec([0.5, 0], [1, 1], [ph.L2Ball(1.0)])
    D = ph.down_hull(S)
    assert ph.membership(D, [0.0, 0.8])
    assert ph.membership(D, [0.6, 0.6])
    assert not ph.membership(D, [0.0, 0.9])  # needs s1 >= 0.5, so s2 <= sqrt(0.75)
    assert not ph.membership(D, [0.8, 0.8])
    # largest t with t (1, 1) in D is 1/sqrt(2)
    assert ph.gauge(D, [1.0, 1.0]) == pytest.approx(math.sqrt(2), rel=1e-9)
    assert ph.gauge(D, [0.0, 1.0]) == pytest.approx(1 / math.sqrt(0.75), rel=1e-9)


def test_vertices_of_box_and_simplex():
    V = ph.enumerate_vertices(ph.Polyhedron.from_box([0, 0], [1, 2])).points
    assert len(V) == 4
    np.testing.assert_allclose(sorted(map(tuple, V)), [(0, 0), (0, 2), (1, 0), (1, 2)], atol=1e-12)
    tri = ph.Polyhedron(np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]), np.array([0.0, 0.0, 1.0]))
    assert len(ph.enumerate_vertices(tri)) == 3


def test_chebyshev_center_and_symmetry_point():
    c, r = ph.chebyshev_center(ph.box_spec([0, 0], [2, 1]))
    assert r == pytest.approx(0.5)
    assert c[1] == pytest.approx(0.5)
    u, s = ph.symmetry_point(ph.Polyhedron.from_box([1, 1], [2, 2]))
    np.testing.assert_allclose(u, [1.5, 1.5], atol=1e-9)
    assert s == pytest.approx(1.0)
    tri = ph.Polyhedron(np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]), np.array([0.0, 0.0, 1.0]))
    u, s = ph.symmetry_point(tri)
    np.testing.assert_allclose(u, [1 / 3, 1 / 3], atol=1e-6)
    assert s == pytest.approx(0.5, abs=1e-6)


def test_empty_sets_are_reported():
    S = ph.box_spec([0, 0], [1, 1], [ph.Halfspaces([[-1.0, -1.0]], [-3.0])])
    assert not ph.is_nonempty(S)
    with pytest.raises(EmptyCoupledSet):
        ph.support_function(S, np.array([1.0, 0.0]))


def test_blocks_must_partition():
    with pytest.raises(DimensionMismatch):
        ph.UncertaintySpec(3, ((0, 1), (2, 1)), ((), ()), ())
    with pytest.raises(DimensionMismatch):
        ph.UncertaintySpec(2, ((0, 1), (1, 1)), ((ph.Box([0, 0], [1, 1]),), ()), ())


def test_hit_and_run_points_lie_in_set_and_repeat():
    S = ph.box_spec([0, 0, 0], [1, 2, 1], [ph.BudgetRow([1, 1, 1], 2.0), ph.L2Ball(1.5)])
    pts = ph.hit_and_run_sample(S, 200, seed=5)
    assert pts.shape == (200, 3)
    assert all(ph.membership(S, p, 1e-9) for p in pts)
    np.testing.assert_array_equal(pts, ph.hit_and_run_sample(S, 200, seed=5))
    assert not np.array_equal(pts, ph.hit_and_run_sample(S, 200, seed=6))


def test_boundary_samples_touch_the_boundary():
    S = ph.box_spec([0, 0], [1, 1], [ph.BudgetRow([1, 1], 1.5)])
    A, b, _ = ph._parts(S)
    pts = ph.hit_and_run_sample(S, 50, seed=1, rescale_to_boundary=True)
    slack = (b[None, :] - pts @ A.T).min(axis=1)
    np.testing.assert_allclose(slack, 0.0, atol=1e-8)


def test_sampling_a_flat_set_raises():
    S = ph.box_spec([0, 0], [1, 0])
    with pytest.raises(EmptyInterior):
        ph.hit_and_run_sample(S, 5, seed=0)


atom_strategy = st.sampled_from(["box", "budget", "halfspaces", "ball"])


@settings(max_examples=40, deadline=None)
@given(st.lists(atom_strategy, min_size=1, max_size=3), st.integers(0, 1000))
def test_json_round_trip(kinds, seed):
    rng = np.random.default_rng(seed)
    d = 3
    atoms = []
    for k in kinds:
        if k == "box":
            atoms.append(ph.Box(-rng.uniform(0, 1, d), rng.uniform(0, 1, d)))
        elif k == "budget":
            atoms.append(ph.BudgetRow(rng.uniform(0, 1, d), float(rng.uniform(1, 2))))
        elif k == "halfspaces":
            atoms.append(ph.Halfspaces(rng.normal(size=(2, d)), rng.uniform(0, 1, 2)))
        else:
            atoms.append(ph.L2Ball(float(rng.uniform(0.5, 2))))
    S = ph.UncertaintySpec(d, ((0, 1), (1, 2)), ((ph.Box([0.0], [1.0]),), ()), tuple(atoms))
    T = ph.spec_from_json(ph.spec_to_json(S))
    assert ph.spec_to_json(T) == ph.spec_to_json(S)
