"""Separating-hyperplane estimation: hard-margin QP, LS classifier, offsets
and the angular trust-region filter."""
import math

import numpy as np
import pytest

from splinesep import svm
from splinesep.errors import InfeasibleSeparationError
from splinesep.geometry import ConvexPolytope


def _square(cx=0.0, cy=0.0, half=1.0):
    return ConvexPolytope(np.array([
        [cx - half, cy - half], [cx + half, cy - half],
        [cx + half, cy + half], [cx - half, cy + half]]))


def _random_instance(rng):
    """Strictly separable point/obstacle pair (point outside the polytope)."""
    from splinesep.geometry import convex_hull
    while True:
        center = rng.uniform(-3, 3, 2)
        cloud = center + rng.uniform(-1.5, 1.5, size=(8, 2))
        hull = convex_hull(cloud)
        if hull.shape[0] < 3:
            continue
        obs = ConvexPolytope(hull)
        for _ in range(50):
            p = rng.uniform(-5, 5, 2)
            if not obs.contains(p, tol=1e-6):
                if np.min(np.linalg.norm(hull - p, axis=1)) > 0.05:
                    return p, obs


def sweep_margin(p, obs, grid=1e-4):
    """Brute-force max margin over unit normals on an angular grid."""
    th = np.arange(0.0, 2 * np.pi, grid)
    W = np.column_stack([np.cos(th), np.sin(th)])
    margins = (W @ p - (obs.vertices @ W.T).max(axis=0)) / 2.0
    return float(margins.max())


def qp_margin(p, obs):
    w = svm.solve_svm(svm.SeparationProblem(p, obs, method="QP"))
    return float((w @ p - (obs.vertices @ w).max()) / 2.0)


class TestHardMarginQp:
    def test_two_point_symmetric(self):
        # Point at (2, 0) vs unit square: max-margin normal is +x.
        w = svm.solve_svm(svm.SeparationProblem([2.0, 0.0], _square(), method="QP"))
        assert w == pytest.approx([1.0, 0.0], abs=1e-8)

    def test_margin_matches_angular_sweep(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p, obs = _random_instance(rng)
            got = qp_margin(p, obs)
            want = sweep_margin(p, obs)
            assert got == pytest.approx(want, rel=1e-3, abs=1e-6)

    def test_unit_norm_and_vertex_side(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            p, obs = _random_instance(rng)
            w = svm.solve_svm(svm.SeparationProblem(p, obs, method="QP"))
            assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-9)
            b = svm.vertex_offset(w, obs)
            assert (obs.vertices @ w + b <= 1e-9).all()
            assert w @ p + b > 0  # robot on the positive side

    def test_infeasible_inside(self):
        with pytest.raises(InfeasibleSeparationError):
            svm.solve_svm(svm.SeparationProblem([0.1, 0.0], _square(), method="QP"))


class TestLsClassifier:
    def test_ls_close_to_qp(self):
        # tau = 1e6 makes the LS classifier nearly hard-margin: within 2 deg.
        rng = np.random.default_rng(9)
        for _ in range(50):
            p, obs = _random_instance(rng)
            w_qp = svm.solve_svm(svm.SeparationProblem(p, obs, method="QP"))
            w_ls = svm.solve_svm(svm.SeparationProblem(p, obs, method="LS",
                                                       ls_tau=1e6))
            assert svm.rotation_angle(w_qp, w_ls) <= math.radians(2.0)

    def test_ls_works_in_collision(self):
        # Point inside the obstacle: the QP is infeasible but LS still points
        # from the obstacle bulk toward the robot sample.
        w = svm.solve_svm(svm.SeparationProblem([0.9, 0.0], _square(), method="LS"))
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-9)
        assert w[0] > 0.5  # roughly +x

    def test_separate_dispatch(self):
        sq = _square()
        w_out = svm.separate([3.0, 0.0], sq, in_collision=False)
        w_in = svm.separate([0.9, 0.0], sq, in_collision=True)
        assert w_out == pytest.approx([1.0, 0.0], abs=1e-6)
        assert w_in[0] > 0.5

    def test_separate_always_unit(self):
        # Even the degenerate dead-centre sample yields some unit direction
        # (LS tie-break or the fallback chain).
        sq = _square()
        w = svm.separate([0.0, 0.0], sq, in_collision=True,
                         fallback_dir=np.array([0.0, 2.0]))
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-9)


class TestVertexOffset:
    def test_square_plus_x(self):
        assert svm.vertex_offset([1.0, 0.0], _square()) == pytest.approx(-1.0)

    def test_support_vertex_tight(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            th = rng.uniform(0, 2 * np.pi)
            w = np.array([np.cos(th), np.sin(th)])
            b = svm.vertex_offset(w, _square(1.0, -2.0))
            vals = _square(1.0, -2.0).vertices @ w + b
            assert vals.max() == pytest.approx(0.0, abs=1e-12)
            assert (vals <= 1e-12).all()


class TestTrustRegionFilter:
    def test_accepts_small_rotation(self):
        w_old = np.array([1.0, 0.0])
        w_new = np.array([np.cos(0.1), np.sin(0.1)])
        out = svm.trust_region_filter(w_old, w_new, math.radians(10.0))
        assert out is not w_old
        assert out == pytest.approx(w_new)

    def test_rejects_large_rotation(self):
        w_old = np.array([1.0, 0.0])
        w_new = np.array([0.0, 1.0])
        out = svm.trust_region_filter(w_old, w_new, math.radians(10.0))
        assert out == pytest.approx(w_old)

    def test_no_blending(self):
        # Output is always exactly one of the two inputs, never a mix.
        rng = np.random.default_rng(11)
        for _ in range(100):
            a, b = rng.uniform(0, 2 * np.pi, 2)
            w_old = np.array([np.cos(a), np.sin(a)])
            w_new = np.array([np.cos(b), np.sin(b)])
            out = svm.trust_region_filter(w_old, w_new, math.radians(20.0))
            assert (np.allclose(out, w_old, atol=0, rtol=0)
                    or np.allclose(out, w_new, atol=0, rtol=0))

    def test_boundary_inclusive(self):
        bar = math.radians(10.0)
        w_old = np.array([1.0, 0.0])
        w_new = np.array([np.cos(bar * 0.999), np.sin(bar * 0.999)])
        assert svm.trust_region_filter(w_old, w_new, bar) == pytest.approx(w_new)


class TestTimers:
    def test_accumulation(self):
        timers = svm.SvmTimers()
        sq = _square()
        svm.solve_svm(svm.SeparationProblem([3.0, 0.0], sq, method="QP"), timers)
        svm.solve_svm(svm.SeparationProblem([3.0, 0.0], sq, method="LS"), timers)
        assert timers.n_qp == 1 and timers.n_ls == 1
        assert timers.t_qp >= 0.0 and timers.t_ls >= 0.0
