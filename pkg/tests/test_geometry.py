import numpy as np
import pytest

from valsynth.geometry import (chebyshev_center, cone_box_generators,
                               extreme_points, in_hull, vertex_enumeration,
                               polytope_interior_samples)


def _vset(arr, digits=9):
    return {tuple(np.round(row, digits)) for row in np.atleast_2d(arr)}


def test_unit_square_vertices():
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.array([1.0, 1.0, 0.0, 0.0])
    poly = vertex_enumeration(A, b)
    assert _vset(poly.vertices) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert poly.contains([0.5, 0.5])
    assert not poly.contains([1.5, 0.5])


def test_segment_via_implicit_equality():
    # x + y = 1 encoded as two opposite inequalities, 0 <= x <= 1
    A = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, 0.0], [-1.0, 0.0]])
    b = np.array([1.0, -1.0, 1.0, 0.0])
    poly = vertex_enumeration(A, b)
    assert _vset(poly.vertices) == {(0.0, 1.0), (1.0, 0.0)}


def test_single_point_and_empty():
    A = np.vstack([np.eye(2), -np.eye(2)])
    poly = vertex_enumeration(A, np.array([0.5, 0.25, -0.5, -0.25]))
    assert _vset(poly.vertices) == {(0.5, 0.25)}
    empty = vertex_enumeration(A, np.array([-1.0, 1.0, -1.0, 1.0]))
    assert empty.is_empty
    assert not empty.contains([0.0, 0.0])


def test_interval_1d():
    A = np.array([[1.0], [-1.0]])
    poly = vertex_enumeration(A, np.array([2.0, 3.0]))
    assert _vset(poly.vertices) == {(-3.0,), (2.0,)}


def test_extreme_points_degenerate_cloud():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5], [0.25, 0.25]])
    assert _vset(extreme_points(pts)) == {(0.0, 0.0), (1.0, 1.0)}
    # duplicates collapse
    pts = np.array([[1.0, 2.0], [1.0, 2.0]])
    assert extreme_points(pts).shape == (1, 2)


def test_in_hull_on_segment():
    verts = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert in_hull([0.3, 0.3], verts)
    assert not in_hull([0.3, 0.4], verts)


def test_cone_generators_cover_halfspace():
    gens = cone_box_generators(np.array([[0.0, 1.0, 0.0]]))
    assert gens.shape[0] >= 4
    assert np.all(gens[:, 1] >= -1e-12)
    # generators positively span the halfspace boundary directions
    assert any(g[0] > 0.5 for g in gens) and any(g[0] < -0.5 for g in gens)
    assert any(g[2] > 0.5 for g in gens) and any(g[2] < -0.5 for g in gens)


def test_chebyshev_center_square():
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.array([1.0, 1.0, 1.0, 1.0])
    center, radius = chebyshev_center(A, b)
    np.testing.assert_allclose(center, [0.0, 0.0], atol=1e-9)
    assert radius == pytest.approx(1.0, abs=1e-9)


def test_interior_samples_stay_inside():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    rng = np.random.default_rng(0)
    pts = polytope_interior_samples(verts, 50, rng)
    assert pts.shape == (50, 2)
    assert np.all(pts >= -1e-12)
    assert np.all(pts.sum(axis=1) <= 1 + 1e-12)
