"""Separating hyperplanes for robot-obstacle pairs.

A hyperplane is found by classifying the robot centre (+1) against the
obstacle vertices (-1), either through the LS-SVM saddle-point system or the
hard-margin QP. The normal is renormalized and the offset recomputed from the
obstacle's support vertex after every solve, so that w.p + b is a true metric
distance. An angular trust region stabilizes inter-iteration updates.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSeparationError
from .geometry import ConvexPolytope
from .linalg_qp import DenseQp, solve_qp, solve_saddle

DEFAULT_LS_TAU = 1e6
# Tiny diagonal on the offset variable keeps the hard-margin Hessian PD; the
# offset is recomputed via vertex_offset afterwards anyway.
_QP_OFFSET_REG = 1e-8


@dataclass(frozen=True)
class Hyperplane:
    """Unit normal pointing toward the robot, and metric offset (m)."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(2)
        object.__setattr__(self, "w", w)

    def signed_distance(self, p) -> float:
        return float(self.w @ np.asarray(p, dtype=float)) + self.b


@dataclass
class SeparationProblem:
    robot_point: np.ndarray
    obstacle: ConvexPolytope
    method: str = "QP"  # "LS" | "QP"
    ls_tau: float = DEFAULT_LS_TAU

    def __post_init__(self):
        self.robot_point = np.asarray(self.robot_point, dtype=float).reshape(2)
        if self.method not in ("LS", "QP"):
            raise ValueError(f"method must be 'LS' or 'QP', got {self.method!r}")

    def labels(self) -> np.ndarray:
        return np.concatenate([[1.0], -np.ones(self.obstacle.n_vertices)])

    def samples(self) -> np.ndarray:
        return np.vstack([self.robot_point, self.obstacle.vertices])


@dataclass
class SvmTimers:
    """Accumulated wall time (s) spent in LS and QP sub-solves."""

    t_ls: float = 0.0
    t_qp: float = 0.0
    n_ls: int = 0
    n_qp: int = 0


def solve_svm(prob: SeparationProblem, timers: SvmTimers | None = None) -> np.ndarray:
    """Raw (unit) separating normal for a robot point vs obstacle pair.

    The QP path requires strict separability and raises
    InfeasibleSeparationError otherwise; the LS path always returns a
    direction, even with the robot point inside the obstacle.
    """
    y = prob.samples()
    gamma = prob.labels()
    if prob.method == "LS":
        t0 = time.perf_counter()
        Z = y * gamma[:, None]
        _b_ls, alpha = solve_saddle(Z, gamma, prob.ls_tau)
        w = Z.T @ alpha
        if timers is not None:
            timers.t_ls += time.perf_counter() - t0
            timers.n_ls += 1
    else:
        t0 = time.perf_counter()
        # Variables (w1, w2, b): min 1/2 |w|^2  s.t. gamma_k (w.y_k + b) >= 1.
        H = np.diag([1.0, 1.0, _QP_OFFSET_REG])
        g = np.zeros(3)
        C = gamma[:, None] * np.column_stack([y, np.ones(len(gamma))])
        d = np.ones(len(gamma))
        sol = solve_qp(DenseQp(H=H, g=g, C=C, d=d))
        if timers is not None:
            timers.t_qp += time.perf_counter() - t0
            timers.n_qp += 1
        if sol.status != "optimal":
            raise InfeasibleSeparationError(
                "hard-margin QP infeasible (robot likely inside obstacle); use the LS path"
            )
        w = sol.z[:2]
    norm = float(np.linalg.norm(w))
    if norm < 1e-12:
        raise InfeasibleSeparationError("degenerate SVM direction (zero normal)")
    return w / norm


def vertex_offset(w: np.ndarray, obstacle: ConvexPolytope) -> float:
    """Offset pushing the plane onto the obstacle's support vertex.

    b = -max_j w.v_j, so w.v_j + b <= 0 for every vertex with equality at the
    support vertex, and w.p + b is the signed robot-to-plane distance.
    """
    w = np.asarray(w, dtype=float).reshape(2)
    return -float(np.max(obstacle.vertices @ w))


def trust_region_filter(w_old: np.ndarray, w_new: np.ndarray, theta_bar: float) -> np.ndarray:
    """Keep w_new only if it rotates at most theta_bar (rad) from w_old."""
    w_old = np.asarray(w_old, dtype=float).reshape(2)
    w_new = np.asarray(w_new, dtype=float).reshape(2)
    theta = float(np.arccos(np.clip(w_old @ w_new, -1.0, 1.0)))
    return w_new if theta <= theta_bar else w_old


def rotation_angle(w_old, w_new) -> float:
    return float(np.arccos(np.clip(np.asarray(w_old) @ np.asarray(w_new), -1.0, 1.0)))


def separate(robot_point, obstacle: ConvexPolytope, in_collision: bool,
             prev_normal: np.ndarray | None = None,
             fallback_dir: np.ndarray | None = None,
             ls_tau: float = DEFAULT_LS_TAU,
             timers: SvmTimers | None = None) -> np.ndarray:
    """Method dispatch: LS when the pair is in collision, QP otherwise (the QP
    is infeasible in collision, where LS still yields a useful direction).

    Degenerate LS directions fall back to fallback_dir, then prev_normal,
    then +x.
    """
    method = "LS" if in_collision else "QP"
    try:
        return solve_svm(SeparationProblem(robot_point, obstacle, method=method,
                                           ls_tau=ls_tau), timers=timers)
    except InfeasibleSeparationError:
        if method == "QP":
            return solve_svm(SeparationProblem(robot_point, obstacle, method="LS",
                                               ls_tau=ls_tau), timers=timers)
        for cand in (fallback_dir, prev_normal):
            if cand is not None and np.linalg.norm(cand) > 1e-12:
                c = np.asarray(cand, dtype=float)
                return c / np.linalg.norm(c)
        return np.array([1.0, 0.0])
