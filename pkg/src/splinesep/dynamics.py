"""Unicycle dynamics, classical RK4 over one control interval, and the cubic
dense-output polynomial whose monomial coefficients feed the Bernstein
parameterisation.

Controls are zero-order-hold per interval. All functions also come in batched
forms (leading axis = interval index) with analytic sensitivities, which the
transcription uses to assemble exact constraint Jacobians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_STATES = 3  # x, y, theta
N_CONTROLS = 2  # v, omega


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @staticmethod
    def from_array(a) -> "RobotState":
        a = np.asarray(a, dtype=float).reshape(3)
        return RobotState(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class ControlInput:
    v: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.omega], dtype=float)


def f(state, u) -> np.ndarray:
    """Unicycle right-hand side [v cos(theta), v sin(theta), omega]."""
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    th = state[..., 2]
    v, om = u[..., 0], u[..., 1]
    return np.stack([v * np.cos(th), v * np.sin(th), np.broadcast_to(om, np.shape(th))], axis=-1)


def f_jacobians(state, u):
    """(df/dx, df/du) for a batch of states/controls.

    Shapes: state (..., 3), u (..., 2) -> A (..., 3, 3), B (..., 3, 2).
    """
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    th = state[..., 2]
    v = u[..., 0]
    shape = np.broadcast_shapes(th.shape, v.shape)
    A = np.zeros(shape + (3, 3))
    A[..., 0, 2] = -v * np.sin(th)
    A[..., 1, 2] = v * np.cos(th)
    B = np.zeros(shape + (3, 2))
    B[..., 0, 0] = np.cos(th)
    B[..., 1, 0] = np.sin(th)
    B[..., 2, 1] = 1.0
    return A, B


def rk4_step(state, u, h: float):
    """Classical RK4 update; returns (end_state, stages (4, 3))."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    k1 = f(state, u)
    k2 = f(state + 0.5 * h * k1, u)
    k3 = f(state + 0.5 * h * k2, u)
    k4 = f(state + h * k3, u)
    end = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return end, np.stack([k1, k2, k3, k4], axis=-2)


@dataclass(frozen=True)
class IntervalPolynomial:
    """Cubic per-state monomial polynomial in tau over one interval of length h.

    coeffs has shape (4, 3): row j holds the tau**j coefficient of each state.
    Value at tau=0 is the interval start state; tau=1 reproduces the RK4 end
    state exactly.
    """

    coeffs: np.ndarray
    h: float

    def eval(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        powers = tau[..., None] ** np.arange(4)
        return powers @ self.coeffs

    def position_coeffs(self) -> np.ndarray:
        """Monomial coefficients of (x, y) only, shape (4, 2)."""
        return self.coeffs[:, :2]


def dense_output(state, stages, h: float) -> IntervalPolynomial:
    """Third-order continuous extension of RK4.

    Monomial coefficients: c0 = x_k, c1 = h k1,
    c2 = h (-3 k1 + 2 k2 + 2 k3 - k4) / 2, c3 = h (2 k1 - 2 k2 - 2 k3 + 2 k4) / 3.
    Matches both endpoints and the start derivative.
    """
    state = np.asarray(state, dtype=float)
    k1, k2, k3, k4 = stages
    c = np.empty((4, 3))
    c[0] = state
    c[1] = h * k1
    c[2] = h * (-3 * k1 + 2 * k2 + 2 * k3 - k4) / 2.0
    c[3] = h * (2 * k1 - 2 * k2 - 2 * k3 + 2 * k4) / 3.0
    return IntervalPolynomial(c, h)


def rk4_batch_with_sens(X: np.ndarray, U: np.ndarray, h: float):
    """RK4 endpoint, dense-output coefficients and their sensitivities for a
    batch of intervals.

    Args:
        X: (N, 3) start states, U: (N, 2) interval controls, h: step length.

    Returns a dict with:
        end (N, 3); stages (N, 4, 3);
        d_end_dx (N, 3, 3), d_end_du (N, 3, 2), d_end_dh (N, 3);
        mono (N, 4, 3) monomial coefficients (axis 1 = power of tau);
        d_mono_dx (N, 4, 3, 3), d_mono_du (N, 4, 3, 2), d_mono_dh (N, 4, 3).
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    N = X.shape[0]
    I3 = np.broadcast_to(np.eye(3), (N, 3, 3))

    x1 = X
    k1 = f(x1, U)
    A1, B1 = f_jacobians(x1, U)
    Dk1x = A1
    Dk1u = B1
    Dk1h = np.zeros((N, 3))

    x2 = X + 0.5 * h * k1
    k2 = f(x2, U)
    A2, B2 = f_jacobians(x2, U)
    Dk2x = A2 @ (I3 + 0.5 * h * Dk1x)
    Dk2u = A2 @ (0.5 * h * Dk1u) + B2
    Dk2h = np.einsum("nij,nj->ni", A2, 0.5 * k1 + 0.5 * h * Dk1h)

    x3 = X + 0.5 * h * k2
    k3 = f(x3, U)
    A3, B3 = f_jacobians(x3, U)
    Dk3x = A3 @ (I3 + 0.5 * h * Dk2x)
    Dk3u = A3 @ (0.5 * h * Dk2u) + B3
    Dk3h = np.einsum("nij,nj->ni", A3, 0.5 * k2 + 0.5 * h * Dk2h)

    x4 = X + h * k3
    k4 = f(x4, U)
    A4, B4 = f_jacobians(x4, U)
    Dk4x = A4 @ (I3 + h * Dk3x)
    Dk4u = A4 @ (h * Dk3u) + B4
    Dk4h = np.einsum("nij,nj->ni", A4, k3 + h * Dk3h)

    ksum = k1 + 2 * k2 + 2 * k3 + k4
    Dksumx = Dk1x + 2 * Dk2x + 2 * Dk3x + Dk4x
    Dksumu = Dk1u + 2 * Dk2u + 2 * Dk3u + Dk4u
    Dksumh = Dk1h + 2 * Dk2h + 2 * Dk3h + Dk4h

    end = X + (h / 6.0) * ksum
    d_end_dx = I3 + (h / 6.0) * Dksumx
    d_end_du = (h / 6.0) * Dksumu
    d_end_dh = ksum / 6.0 + (h / 6.0) * Dksumh

    # Dense-output monomial coefficients and their linear-combination weights.
    c2v = (-3 * k1 + 2 * k2 + 2 * k3 - k4) / 2.0
    c3v = (2 * k1 - 2 * k2 - 2 * k3 + 2 * k4) / 3.0
    mono = np.stack([X, h * k1, h * c2v, h * c3v], axis=1)

    Dc2x = (-3 * Dk1x + 2 * Dk2x + 2 * Dk3x - Dk4x) / 2.0
    Dc3x = (2 * Dk1x - 2 * Dk2x - 2 * Dk3x + 2 * Dk4x) / 3.0
    Dc2u = (-3 * Dk1u + 2 * Dk2u + 2 * Dk3u - Dk4u) / 2.0
    Dc3u = (2 * Dk1u - 2 * Dk2u - 2 * Dk3u + 2 * Dk4u) / 3.0
    Dc2h = (-3 * Dk1h + 2 * Dk2h + 2 * Dk3h - Dk4h) / 2.0
    Dc3h = (2 * Dk1h - 2 * Dk2h - 2 * Dk3h + 2 * Dk4h) / 3.0

    d_mono_dx = np.stack([I3, h * Dk1x, h * Dc2x, h * Dc3x], axis=1)
    d_mono_du = np.stack([np.zeros((N, 3, 2)), h * Dk1u, h * Dc2u, h * Dc3u], axis=1)
    d_mono_dh = np.stack(
        [np.zeros((N, 3)), k1 + h * Dk1h, c2v + h * Dc2h, c3v + h * Dc3h], axis=1
    )

    return {
        "end": end,
        "stages": np.stack([k1, k2, k3, k4], axis=1),
        "d_end_dx": d_end_dx,
        "d_end_du": d_end_du,
        "d_end_dh": d_end_dh,
        "mono": mono,
        "d_mono_dx": d_mono_dx,
        "d_mono_du": d_mono_du,
        "d_mono_dh": d_mono_dh,
    }
