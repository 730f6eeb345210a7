"""Convex geometry: polytopes, distances, hulls, hull-obstacle clearance."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splinesep import geometry as geo
from splinesep.errors import InvalidPolytopeError


def _square(cx=0.0, cy=0.0, half=1.0):
    return geo.ConvexPolytope(np.array([
        [cx - half, cy - half], [cx + half, cy - half],
        [cx + half, cy + half], [cx - half, cy + half]]))


class TestConvexPolytope:
    def test_valid_square(self):
        sq = _square()
        assert sq.n_vertices == 4
        assert sq.contains([0.0, 0.0])
        assert sq.contains([1.0, 1.0])  # boundary counts
        assert not sq.contains([1.1, 0.0])

    def test_rejects_clockwise(self):
        with pytest.raises(InvalidPolytopeError):
            geo.ConvexPolytope(np.array([[0, 0], [0, 1], [1, 1], [1, 0]]))

    def test_rejects_collinear(self):
        with pytest.raises(InvalidPolytopeError):
            geo.ConvexPolytope(np.array([[0, 0], [1, 0], [2, 0], [1, 1]]))

    def test_rejects_duplicates(self):
        with pytest.raises(InvalidPolytopeError):
            geo.ConvexPolytope(np.array([[0, 0], [1, 0], [1, 0], [0, 1]]))

    def test_rejects_too_few(self):
        with pytest.raises(InvalidPolytopeError):
            geo.ConvexPolytope(np.array([[0, 0], [1, 0]]))

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidPolytopeError):
            geo.ConvexPolytope(np.array([[0, 0], [1, 0], [np.inf, 1]]))

    def test_support(self):
        sq = _square()
        assert sq.support([1.0, 0.0]) == pytest.approx(1.0)
        assert sq.support([1.0, 1.0]) == pytest.approx(2.0)


class TestDistances:
    def test_point_outside(self):
        assert geo.point_polytope_distance([3.0, 0.0], _square()) == pytest.approx(2.0)

    def test_point_inside_is_zero(self):
        assert geo.point_polytope_distance([0.2, -0.3], _square()) == 0.0

    def test_point_diagonal(self):
        d = geo.point_polytope_distance([2.0, 2.0], _square())
        assert d == pytest.approx(np.sqrt(2.0), abs=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-3, 3, size=(40, 2))
        sq = _square()
        batch = geo.points_polytope_distance(pts, sq)
        for p, d in zip(pts, batch):
            assert d == pytest.approx(geo.point_polytope_distance(p, sq), abs=1e-12)


class TestConvexHull:
    def test_square_hull(self):
        pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.8]])
        hull = geo.convex_hull(pts)
        assert hull.shape == (4, 2)

    def test_collinear_returns_segment(self):
        hull = geo.convex_hull(np.array([[0, 0], [1, 1], [2, 2], [0.5, 0.5]]))
        assert hull.shape == (2, 2)

    def test_single_point(self):
        hull = geo.convex_hull(np.array([[1.0, 2.0], [1.0, 2.0]]))
        assert hull.shape == (1, 2)

    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
                    min_size=3, max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_hull_contains_all_points(self, points):
        pts = np.asarray(points)
        hull = geo.convex_hull(pts)
        if hull.shape[0] < 3:
            return  # degenerate; containment is checked by distance tests
        poly = geo.ConvexPolytope(hull)
        for p in pts:
            assert poly.contains(p, tol=1e-7)


class TestHullClearance:
    def test_separated(self):
        pts = np.array([[3.0, -1.0], [3.0, 1.0], [4.0, 0.0]])
        assert geo.hull_polytope_clearance(pts, _square()) == pytest.approx(2.0)

    def test_overlapping_is_zero(self):
        pts = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 1.0]])
        assert geo.hull_polytope_clearance(pts, _square()) == 0.0

    def test_hull_fully_inside_is_zero(self):
        pts = np.array([[-0.2, -0.2], [0.2, -0.2], [0.0, 0.2]])
        assert geo.hull_polytope_clearance(pts, _square()) == 0.0

    def test_polytope_inside_hull_is_zero(self):
        pts = np.array([[-5, -5], [5, -5], [5, 5], [-5, 5]], dtype=float)
        assert geo.hull_polytope_clearance(pts, _square()) == 0.0

    def test_degenerate_point_hull(self):
        pts = np.tile([3.0, 0.0], (4, 1))
        assert geo.hull_polytope_clearance(pts, _square()) == pytest.approx(2.0)

    def test_degenerate_segment_hull(self):
        pts = np.array([[3.0, -2.0], [3.0, 2.0], [3.0, 0.0]])
        assert geo.hull_polytope_clearance(pts, _square()) == pytest.approx(2.0)

    @given(st.lists(st.tuples(st.floats(-4, 4), st.floats(-4, 4)),
                    min_size=1, max_size=8),
           st.floats(-2, 2), st.floats(-2, 2))
    @settings(max_examples=200, deadline=None)
    def test_clearance_lower_bounds_sampled_distance(self, points, cx, cy):
        # Clearance of the hull never exceeds the distance from any convex
        # combination of the points to the obstacle.
        pts = np.asarray(points)
        sq = _square(cx, cy, 0.7)
        clear = geo.hull_polytope_clearance(pts, sq)
        rng = np.random.default_rng(0)
        wts = rng.dirichlet(np.ones(pts.shape[0]), size=32)
        combos = wts @ pts
        dmin = geo.points_polytope_distance(combos, sq).min()
        assert clear <= dmin + 1e-7
