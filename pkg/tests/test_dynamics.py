"""Unicycle dynamics, RK4 integration and its dense-output extension."""
import numpy as np
import pytest

from splinesep import dynamics as dyn


def _exact_arc(state, u, t):
    """Closed-form unicycle flow for constant (v, omega)."""
    x, y, th = state
    v, om = u
    if abs(om) < 1e-14:
        return np.array([x + v * t * np.cos(th), y + v * t * np.sin(th), th])
    return np.array([
        x + v / om * (np.sin(th + om * t) - np.sin(th)),
        y - v / om * (np.cos(th + om * t) - np.cos(th)),
        th + om * t])


class TestRhs:
    def test_values(self):
        out = dyn.f([0.0, 0.0, np.pi / 2], [2.0, 0.5])
        assert out == pytest.approx([0.0, 2.0, 0.5], abs=1e-12)

    def test_jacobians_match_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.standard_normal(3)
            u = rng.standard_normal(2)
            A, B = dyn.f_jacobians(x, u)
            h = 1e-6
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                fd = (dyn.f(x + e, u) - dyn.f(x - e, u)) / (2 * h)
                assert np.abs(A[:, j] - fd).max() < 1e-8
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                fd = (dyn.f(x, u + e) - dyn.f(x, u - e)) / (2 * h)
                assert np.abs(B[:, j] - fd).max() < 1e-8


class TestRk4:
    def test_order_slope(self):
        # Global error over a fixed horizon must shrink as h^4: the fitted
        # log-log slope stays within 4.0 +/- 0.2.
        state = np.array([0.0, 0.0, 0.3])
        u = np.array([1.0, 0.7])
        horizon = 2.0
        errs, hs = [], []
        for n_steps in (8, 16, 32, 64, 128):
            h = horizon / n_steps
            x = state.copy()
            for _ in range(n_steps):
                x, _ = dyn.rk4_step(x, u, h)
            errs.append(np.linalg.norm(x - _exact_arc(state, u, horizon)))
            hs.append(h)
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert slope == pytest.approx(4.0, abs=0.2)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            dyn.rk4_step(np.zeros(3), np.zeros(2), 0.0)

    def test_straight_line_is_exact(self):
        # With omega = 0 and constant heading the flow is linear in t, which
        # RK4 reproduces exactly.
        end, _ = dyn.rk4_step(np.array([1.0, 2.0, 0.5]), np.array([1.5, 0.0]), 0.73)
        assert end == pytest.approx(_exact_arc([1, 2, 0.5], [1.5, 0], 0.73), abs=1e-14)


class TestDenseOutput:
    def test_matches_endpoints(self):
        state = np.array([0.2, -0.1, 1.0])
        u = np.array([0.8, -0.4])
        h = 0.37
        end, stages = dyn.rk4_step(state, u, h)
        poly = dyn.dense_output(state, stages, h)
        assert poly.eval(0.0) == pytest.approx(state, abs=1e-14)
        assert poly.eval(1.0) == pytest.approx(end, abs=1e-13)

    def test_start_derivative(self):
        state = np.array([0.0, 0.0, 0.6])
        u = np.array([1.2, 0.9])
        h = 0.25
        _, stages = dyn.rk4_step(state, u, h)
        poly = dyn.dense_output(state, stages, h)
        # d/dtau at 0 equals h * f(x0, u).
        tau = 1e-7
        deriv = (poly.eval(tau) - poly.eval(0.0)) / tau
        assert deriv == pytest.approx(h * dyn.f(state, u), abs=1e-5)

    def test_uniform_order(self):
        # A uniform order-q continuous extension has mid-interval value error
        # O(h^(q+1)); q = 3 for this cubic, so the value-error slope is 4
        # and the derived order (slope - 1) is 3.
        state = np.array([0.0, 0.0, 0.3])
        u = np.array([1.0, 0.7])
        errs, hs = [], []
        for h in (0.4, 0.2, 0.1, 0.05, 0.025):
            _, stages = dyn.rk4_step(state, u, h)
            poly = dyn.dense_output(state, stages, h)
            err = 0.0
            for tau in np.linspace(0.0, 1.0, 21):
                err = max(err, np.linalg.norm(
                    poly.eval(tau) - _exact_arc(state, u, tau * h)))
            errs.append(err)
            hs.append(h)
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert slope - 1.0 == pytest.approx(3.0, abs=0.2)

    def test_position_coeffs_shape(self):
        state = np.zeros(3)
        _, stages = dyn.rk4_step(state, np.array([1.0, 0.0]), 0.1)
        poly = dyn.dense_output(state, stages, 0.1)
        assert poly.position_coeffs().shape == (4, 2)


class TestBatchSensitivities:
    def test_matches_scalar_path(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((5, 3))
        U = rng.standard_normal((5, 2))
        h = 0.21
        out = dyn.rk4_batch_with_sens(X, U, h)
        ends = out[0] if isinstance(out, tuple) else out["end"]
        for k in range(5):
            want, _ = dyn.rk4_step(X[k], U[k], h)
            assert np.abs(ends[k] - want).max() < 1e-12
