"""Multiple-shooting NLP with Bernstein continuous-collision constraints.

Two variants of the same time-optimal problem:

* decoupled -- separating hyperplanes are frozen parameters, re-estimated
  between solver iterations; all collision constraints are affine in the
  decision variables.
* coupled -- hyperplane knots (w, b) are decision variables, with
  obstacle-vertex and norm constraints added per knot (the LSR baseline).

Decision vector layout: [T, x_0..x_N, u_0..u_{N-1}, (coupled: w/b knots)].
Per interval the position trajectory is the cubic RK4 dense output; the
scalar collision polynomial g(tau) = w(tau).p(tau) + b(tau) - eps - r_v is
degree 4 = 1 + 3, and all five Bernstein coefficients are constrained >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bernstein, dynamics
from .errors import RejectedProblemError
from .geometry import ConvexPolytope, point_polytope_distance

DECOUPLED = "decoupled"
COUPLED = "coupled"

N_STATES = dynamics.N_STATES
N_CONTROLS = dynamics.N_CONTROLS

# Constant basis maps: monomial(3) -> Bernstein(3); deg-1 x deg-3 product
# split by the two deg-1 coefficients; deg-1 -> deg-4 elevation.
_M3 = bernstein.monomial_to_bernstein_matrix(3)
_PROD13 = bernstein.product_matrix(1, 3)
_PA0 = _PROD13[:, 0, :]  # (5, 4)
_PA1 = _PROD13[:, 1, :]
_PB0 = _PA0 @ _M3  # act directly on monomial position coefficients
_PB1 = _PA1 @ _M3
_E14 = bernstein.elevation_matrix(1, 4)  # (5, 2)


@dataclass
class PlanningProblem:
    x_start: np.ndarray
    x_goal: np.ndarray
    obstacles: list[ConvexPolytope] = field(default_factory=list)
    x_lb: np.ndarray = None
    x_ub: np.ndarray = None
    u_lb: np.ndarray = None
    u_ub: np.ndarray = None
    robot_radius: float = 0.2
    safety_margin: float = 0.05
    n_intervals: int = 20
    stage_weight: float = 1e-3  # weight on the integrated |u|^2 stage cost
    t_min: float = 0.1
    t_max: float = 100.0

    def __post_init__(self):
        self.x_start = np.asarray(self.x_start, dtype=float).reshape(N_STATES)
        self.x_goal = np.asarray(self.x_goal, dtype=float).reshape(N_STATES)
        self.x_lb = (np.full(N_STATES, -np.inf) if self.x_lb is None
                     else np.asarray(self.x_lb, dtype=float).reshape(N_STATES))
        self.x_ub = (np.full(N_STATES, np.inf) if self.x_ub is None
                     else np.asarray(self.x_ub, dtype=float).reshape(N_STATES))
        self.u_lb = (np.array([0.0, -1.5]) if self.u_lb is None
                     else np.asarray(self.u_lb, dtype=float).reshape(N_CONTROLS))
        self.u_ub = (np.array([1.0, 1.5]) if self.u_ub is None
                     else np.asarray(self.u_ub, dtype=float).reshape(N_CONTROLS))
        if np.any(self.x_lb > self.x_ub) or np.any(self.u_lb > self.u_ub):
            raise ValueError("lower bounds exceed upper bounds")
        if self.n_intervals < 2:
            raise ValueError("need at least 2 control intervals")
        if self.safety_margin < 0:
            raise ValueError("safety margin must be >= 0")
        if self.t_min <= 0 or self.t_max <= self.t_min:
            raise ValueError("invalid T bounds")

    @property
    def n_obstacles(self) -> int:
        return len(self.obstacles)

    @property
    def clearance(self) -> float:
        return self.robot_radius + self.safety_margin


@dataclass
class HyperplaneSchedule:
    """Per obstacle, per knot: unit normal and offset. Interval splines are
    degree-1 Bernstein with endpoint coefficients equal to the knot values."""

    normals: np.ndarray  # (M, N+1, 2)
    offsets: np.ndarray  # (M, N+1)

    def __post_init__(self):
        self.normals = np.asarray(self.normals, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float)
        if self.normals.shape[:2] != self.offsets.shape or self.normals.shape[-1] != 2:
            raise ValueError("normals/offsets shape mismatch")

    @property
    def n_obstacles(self) -> int:
        return self.normals.shape[0]

    @property
    def n_knots(self) -> int:
        return self.normals.shape[1]

    def copy(self) -> "HyperplaneSchedule":
        return HyperplaneSchedule(self.normals.copy(), self.offsets.copy())


def freeze_hyperplanes(schedule: HyperplaneSchedule) -> np.ndarray:
    """Pack knot hyperplane values into a flat parameter vector."""
    return np.concatenate([schedule.normals.ravel(), schedule.offsets.ravel()])


def unfreeze_hyperplanes(params: np.ndarray, n_obstacles: int, n_intervals: int) -> HyperplaneSchedule:
    m, nk = n_obstacles, n_intervals + 1
    params = np.asarray(params, dtype=float)
    if params.shape[0] != m * nk * 3:
        raise ValueError("parameter vector length mismatch")
    normals = params[: m * nk * 2].reshape(m, nk, 2)
    offsets = params[m * nk * 2:].reshape(m, nk)
    return HyperplaneSchedule(normals, offsets)


def interval_spline_coeffs(w_k, w_k1):
    """Degree-1 Bernstein endpoint coefficients for one interval: (beta0,
    beta1) = (value at t_k, value at t_{k+1}). The equivalent monomial pair is
    (w(t_k), w(t_{k+1}) - w(t_k))."""
    return np.asarray(w_k, dtype=float), np.asarray(w_k1, dtype=float)


@dataclass(frozen=True)
class ConstraintBlock:
    kind: str
    is_eq: bool
    start: int  # offset within the eq or ineq vector
    size: int
    meta: tuple = ()


class TranscribedNlp:
    """Finite-dimensional transcription of a PlanningProblem.

    collision_shift adds a tiny internal conservatism to the collision bound
    so that solver-tolerance-level violations cannot break certification.
    """

    def __init__(self, problem: PlanningProblem, variant: str, collision_shift: float = 0.0):
        if variant not in (DECOUPLED, COUPLED):
            raise ValueError(f"unknown variant {variant!r}")
        self.problem = problem
        self.variant = variant
        self.collision_shift = float(collision_shift)
        self.N = problem.n_intervals
        self.M = problem.n_obstacles

        N, M = self.N, self.M
        self._x0 = 1
        self._u0 = 1 + N_STATES * (N + 1)
        self._hp0 = self._u0 + N_CONTROLS * N
        self.num_vars = self._hp0
        if variant == COUPLED:
            self.num_vars += 3 * M * (N + 1)

        # Finite simple bounds become inequality rows.
        # Rows are (knot, dim, sign, bound) meaning sign * value - bound >= 0.
        self._state_bound_rows = []
        for k in range(N + 1):
            for dim in range(N_STATES):
                if np.isfinite(problem.x_lb[dim]):
                    self._state_bound_rows.append((k, dim, 1.0, problem.x_lb[dim]))
                if np.isfinite(problem.x_ub[dim]):
                    self._state_bound_rows.append((k, dim, -1.0, -problem.x_ub[dim]))
        self._control_bound_rows = []
        for k in range(N):
            for dim in range(N_CONTROLS):
                if np.isfinite(problem.u_lb[dim]):
                    self._control_bound_rows.append((k, dim, 1.0, problem.u_lb[dim]))
                if np.isfinite(problem.u_ub[dim]):
                    self._control_bound_rows.append((k, dim, -1.0, -problem.u_ub[dim]))

        self.blocks: list[ConstraintBlock] = []
        off = 0
        self.blocks.append(ConstraintBlock("shooting", True, off, 3 * N))
        off += 3 * N
        self.blocks.append(ConstraintBlock("bc_start", True, off, 3))
        off += 3
        self.blocks.append(ConstraintBlock("bc_goal", True, off, 3))
        off += 3
        self.n_eq = off

        off = 0
        self.blocks.append(ConstraintBlock("t_bounds", False, off, 2))
        off += 2
        self.blocks.append(ConstraintBlock("state_bounds", False, off, len(self._state_bound_rows)))
        off += len(self._state_bound_rows)
        self.blocks.append(ConstraintBlock("control_bounds", False, off, len(self._control_bound_rows)))
        off += len(self._control_bound_rows)
        self._collision0 = off
        for k in range(N):
            for l in range(M):
                self.blocks.append(ConstraintBlock("collision", False, off, 5, meta=(k, l)))
                off += 5
        if variant == COUPLED:
            self._vertex0 = off
            for k in range(N + 1):
                for l in range(M):
                    n_o = problem.obstacles[l].n_vertices
                    self.blocks.append(ConstraintBlock("obstacle_vertex", False, off, n_o, meta=(k, l)))
                    off += n_o
            self._norm0 = off
            for k in range(N + 1):
                for l in range(M):
                    self.blocks.append(ConstraintBlock("normal_norm", False, off, 1, meta=(k, l)))
                    off += 1
        self.n_ineq = off

    # ----- layout helpers -------------------------------------------------

    IDX_T = 0

    def slice_x(self, k: int) -> slice:
        return slice(self._x0 + 3 * k, self._x0 + 3 * (k + 1))

    def slice_u(self, k: int) -> slice:
        return slice(self._u0 + 2 * k, self._u0 + 2 * (k + 1))

    def slice_w(self, l: int, k: int) -> slice:
        base = self._hp0 + 3 * (l * (self.N + 1) + k)
        return slice(base, base + 2)

    def idx_b(self, l: int, k: int) -> int:
        return self._hp0 + 3 * (l * (self.N + 1) + k) + 2

    def decode(self, z: np.ndarray):
        """(T, X (N+1, 3), U (N, 2)) from a decision vector."""
        z = np.asarray(z, dtype=float)
        T = float(z[self.IDX_T])
        X = z[self._x0:self._u0].reshape(self.N + 1, 3)
        U = z[self._u0:self._hp0].reshape(self.N, 2)
        return T, X, U

    def encode(self, T: float, X: np.ndarray, U: np.ndarray,
               schedule: HyperplaneSchedule | None = None) -> np.ndarray:
        z = np.zeros(self.num_vars)
        z[self.IDX_T] = T
        z[self._x0:self._u0] = np.asarray(X, dtype=float).ravel()
        z[self._u0:self._hp0] = np.asarray(U, dtype=float).ravel()
        if self.variant == COUPLED:
            if schedule is None:
                raise ValueError("coupled variant needs an initial hyperplane schedule")
            for l in range(self.M):
                for k in range(self.N + 1):
                    z[self.slice_w(l, k)] = schedule.normals[l, k]
                    z[self.idx_b(l, k)] = schedule.offsets[l, k]
        return z

    def extract_schedule(self, z: np.ndarray) -> HyperplaneSchedule:
        """Hyperplane knots; from z (coupled) or nowhere (raises, decoupled)."""
        if self.variant != COUPLED:
            raise ValueError("decoupled NLP stores hyperplanes in the parameter vector")
        normals = np.zeros((self.M, self.N + 1, 2))
        offsets = np.zeros((self.M, self.N + 1))
        for l in range(self.M):
            for k in range(self.N + 1):
                normals[l, k] = z[self.slice_w(l, k)]
                offsets[l, k] = z[self.idx_b(l, k)]
        return HyperplaneSchedule(normals, offsets)

    def schedule_from(self, z: np.ndarray, params: np.ndarray | None) -> HyperplaneSchedule:
        if self.variant == COUPLED:
            return self.extract_schedule(z)
        return unfreeze_hyperplanes(params, self.M, self.N)

    # ----- objective ------------------------------------------------------

    def objective(self, z: np.ndarray):
        """T + alpha * (T/N) * sum_k |u_k|^2 (midpoint-rule stage cost)."""
        T, _X, U = self.decode(z)
        a = self.problem.stage_weight
        usq = float(np.sum(U * U))
        fval = T * (1.0 + a * usq / self.N)
        grad = np.zeros(self.num_vars)
        grad[self.IDX_T] = 1.0 + a * usq / self.N
        grad[self._u0:self._hp0] = (2.0 * a * T / self.N) * U.ravel()
        return fval, grad

    def hessian_diag(self, z: np.ndarray) -> np.ndarray:
        """Gauss-Newton diagonal of the objective (control regularization)."""
        T = float(z[self.IDX_T])
        h = np.zeros(self.num_vars)
        h[self._u0:self._hp0] = max(0.0, 2.0 * self.problem.stage_weight * T / self.N)
        return h

    # ----- evaluation -----------------------------------------------------

    def _integrate(self, z: np.ndarray):
        T, X, U = self.decode(z)
        h = T / self.N
        sens = dynamics.rk4_batch_with_sens(X[:-1], U, h)
        return T, X, U, h, sens

    def position_spline_coeffs(self, z: np.ndarray) -> np.ndarray:
        """Bernstein position control points per interval, shape (N, 4, 2)."""
        _T, _X, _U, _h, sens = self._integrate(z)
        mono_xy = sens["mono"][:, :, :2]
        return np.einsum("ij,njc->nic", _M3, mono_xy)

    def collision_coeff_values(self, z: np.ndarray, params: np.ndarray | None = None,
                               shift: float = 0.0) -> np.ndarray:
        """Degree-4 collision Bernstein coefficients, shape (N, M, 5)."""
        if self.M == 0:
            return np.zeros((self.N, 0, 5))
        _T, _X, _U, _h, sens = self._integrate(z)
        sched = self.schedule_from(z, params)
        return self._collision_values(sens, sched, shift)

    def _collision_values(self, sens, sched: HyperplaneSchedule, shift: float) -> np.ndarray:
        mono_xy = sens["mono"][:, :, :2]  # (N, 4, 2)
        a0 = np.transpose(sched.normals[:, :-1, :], (1, 0, 2))  # (N, M, 2)
        a1 = np.transpose(sched.normals[:, 1:, :], (1, 0, 2))
        boff = np.stack([sched.offsets[:, :-1].T, sched.offsets[:, 1:].T], axis=-1)  # (N, M, 2)
        g = (np.einsum("pj,njc,nmc->nmp", _PB0, mono_xy, a0)
             + np.einsum("pj,njc,nmc->nmp", _PB1, mono_xy, a1)
             + np.einsum("pi,nmi->nmp", _E14, boff))
        return g - (self.problem.clearance + shift)

    def lagrangian_hessian(self, z: np.ndarray, params: np.ndarray | None,
                           lam_eq: np.ndarray | None, lam_in: np.ndarray | None) -> np.ndarray:
        """Hessian of f - lam.c restricted to the analytically cheap terms.

        Includes the full objective Hessian, the norm rows (2*lam*I on each w
        block) and the bilinear hyperplane-position cross blocks of the
        collision rows. Second derivatives of the RK4 dense output (dynamics
        curvature) are omitted, matching the Gauss-Newton treatment of the
        shooting constraints.
        """
        n = self.num_vars
        N, M = self.N, self.M
        T, _X, U = self.decode(z)
        a = self.problem.stage_weight
        H = np.zeros((n, n))
        H[self._u0:self._hp0, self._u0:self._hp0] = (2.0 * a * T / N) * np.eye(2 * N)
        cross = (2.0 * a / N) * U.ravel()
        H[self.IDX_T, self._u0:self._hp0] = cross
        H[self._u0:self._hp0, self.IDX_T] = cross

        if self.variant != COUPLED or M == 0 or lam_in is None:
            return H
        _T, _X, _U, _h, sens = self._integrate(z)
        dmx = sens["d_mono_dx"][:, :, :2, :]  # (N, 4, 2, 3)
        dmu = sens["d_mono_du"][:, :, :2, :]
        dmh = sens["d_mono_dh"][:, :, :2] / N  # d/dT
        lam_c = lam_in[self._collision0: self._collision0 + 5 * N * M].reshape(N, M, 5)
        # d2g/(dw dz) cross blocks, weighted by the collision multipliers.
        bx0 = np.einsum("nmp,pj,njci->nmci", lam_c, _PB0, dmx)
        bu0 = np.einsum("nmp,pj,njci->nmci", lam_c, _PB0, dmu)
        bt0 = np.einsum("nmp,pj,njc->nmc", lam_c, _PB0, dmh)
        bx1 = np.einsum("nmp,pj,njci->nmci", lam_c, _PB1, dmx)
        bu1 = np.einsum("nmp,pj,njci->nmci", lam_c, _PB1, dmu)
        bt1 = np.einsum("nmp,pj,njc->nmc", lam_c, _PB1, dmh)
        for k in range(N):
            sx, su = self.slice_x(k), self.slice_u(k)
            for l in range(M):
                for sw, bx, bu, bt in ((self.slice_w(l, k), bx0, bu0, bt0),
                                       (self.slice_w(l, k + 1), bx1, bu1, bt1)):
                    H[sw, sx] -= bx[k, l]
                    H[sx, sw] -= bx[k, l].T
                    H[sw, su] -= bu[k, l]
                    H[su, sw] -= bu[k, l].T
                    H[sw, self.IDX_T] -= bt[k, l]
                    H[self.IDX_T, sw] -= bt[k, l]
        lam_n = lam_in[self._norm0:].reshape(N + 1, M)
        for k in range(N + 1):
            for l in range(M):
                sw = self.slice_w(l, k)
                H[sw, sw] += 2.0 * lam_n[k, l] * np.eye(2)
        return H

    def eval_constraints(self, z: np.ndarray, params: np.ndarray | None = None) -> np.ndarray:
        lin = self.linearize(z, params, with_jacobian=False)
        return np.concatenate([lin["c_eq"], lin["c_in"]])

    def eval_jacobian(self, z: np.ndarray, params: np.ndarray | None = None) -> np.ndarray:
        lin = self.linearize(z, params, with_jacobian=True)
        return np.vstack([lin["J_eq"], lin["J_in"]])

    def sparsity_pattern(self) -> np.ndarray:
        """Structural nonzero pattern of the stacked constraint Jacobian."""
        rng = np.random.default_rng(0)
        zs = [self._generic_point(rng) for _ in range(2)]
        params = None
        if self.variant == DECOUPLED and self.M:
            sched = HyperplaneSchedule(
                rng.normal(size=(self.M, self.N + 1, 2)), rng.normal(size=(self.M, self.N + 1)))
            params = freeze_hyperplanes(sched)
        pat = np.zeros((self.n_eq + self.n_ineq, self.num_vars), dtype=bool)
        for z in zs:
            pat |= self.eval_jacobian(z, params) != 0.0
        return pat

    def _generic_point(self, rng) -> np.ndarray:
        z = rng.normal(size=self.num_vars)
        z[self.IDX_T] = 1.0 + rng.random()
        return z

    def linearize(self, z: np.ndarray, params: np.ndarray | None = None,
                  with_jacobian: bool = True) -> dict:
        """Objective, constraints and (optionally) dense Jacobians at z."""
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.num_vars:
            raise ValueError(f"decision vector has length {z.shape[0]}, expected {self.num_vars}")
        p = self.problem
        N, M = self.N, self.M
        T, X, U, h, sens = self._integrate(z)
        sched = self.schedule_from(z, params) if M else None

        c_eq = np.empty(self.n_eq)
        c_eq[: 3 * N] = (X[1:] - sens["end"]).ravel()
        c_eq[3 * N: 3 * N + 3] = X[0] - p.x_start
        c_eq[3 * N + 3:] = X[N] - p.x_goal

        c_in = np.empty(self.n_ineq)
        c_in[0] = T - p.t_min
        c_in[1] = p.t_max - T
        o = 2
        for k, dim, s, bnd in self._state_bound_rows:
            c_in[o] = s * X[k, dim] - bnd
            o += 1
        for k, dim, s, bnd in self._control_bound_rows:
            c_in[o] = s * U[k, dim] - bnd
            o += 1
        if M:
            g = self._collision_values(sens, sched, self.collision_shift)
            c_in[self._collision0: self._collision0 + 5 * N * M] = g.reshape(N * M * 5)
        if self.variant == COUPLED and M:
            o = self._vertex0
            for k in range(N + 1):
                for l in range(M):
                    verts = p.obstacles[l].vertices
                    w = sched.normals[l, k]
                    b = sched.offsets[l, k]
                    c_in[o: o + verts.shape[0]] = -(verts @ w + b)
                    o += verts.shape[0]
            for k in range(N + 1):
                for l in range(M):
                    w = sched.normals[l, k]
                    c_in[o] = 1.0 - float(w @ w)
                    o += 1

        fval, grad = self.objective(z)
        out = {"f": fval, "grad": grad, "c_eq": c_eq, "c_in": c_in,
               "hess_diag": self.hessian_diag(z)}
        if not with_jacobian:
            return out

        J_eq = np.zeros((self.n_eq, self.num_vars))
        for k in range(N):
            rows = slice(3 * k, 3 * k + 3)
            J_eq[rows, self.slice_x(k + 1)] = np.eye(3)
            J_eq[rows, self.slice_x(k)] = -sens["d_end_dx"][k]
            J_eq[rows, self.slice_u(k)] = -sens["d_end_du"][k]
            J_eq[rows, self.IDX_T] = -sens["d_end_dh"][k] / N
        J_eq[3 * N: 3 * N + 3, self.slice_x(0)] = np.eye(3)
        J_eq[3 * N + 3:, self.slice_x(N)] = np.eye(3)

        J_in = np.zeros((self.n_ineq, self.num_vars))
        J_in[0, self.IDX_T] = 1.0
        J_in[1, self.IDX_T] = -1.0
        o = 2
        for k, dim, s, _bnd in self._state_bound_rows:
            J_in[o, self._x0 + 3 * k + dim] = s
            o += 1
        for k, dim, s, _bnd in self._control_bound_rows:
            J_in[o, self._u0 + 2 * k + dim] = s
            o += 1
        if M:
            mono_xy = sens["mono"][:, :, :2]
            a0 = np.transpose(sched.normals[:, :-1, :], (1, 0, 2))
            a1 = np.transpose(sched.normals[:, 1:, :], (1, 0, 2))
            # Combined weight on the monomial position coefficients.
            wxy = (np.einsum("pj,nmc->nmpjc", _PB0, a0)
                   + np.einsum("pj,nmc->nmpjc", _PB1, a1))
            dmx = sens["d_mono_dx"][:, :, :2, :]  # (N, 4, 2, 3)
            dmu = sens["d_mono_du"][:, :, :2, :]
            dmh = sens["d_mono_dh"][:, :, :2]
            dg_dx = np.einsum("nmpjc,njci->nmpi", wxy, dmx)
            dg_du = np.einsum("nmpjc,njci->nmpi", wxy, dmu)
            dg_dT = np.einsum("nmpjc,njc->nmp", wxy, dmh) / N
            if self.variant == COUPLED:
                dg_da0 = np.einsum("pj,njc->npc", _PB0, mono_xy)  # (N, 5, 2)
                dg_da1 = np.einsum("pj,njc->npc", _PB1, mono_xy)
            row = self._collision0
            for k in range(N):
                for l in range(M):
                    rs = slice(row, row + 5)
                    J_in[rs, self.slice_x(k)] = dg_dx[k, l]
                    J_in[rs, self.slice_u(k)] = dg_du[k, l]
                    J_in[rs, self.IDX_T] = dg_dT[k, l]
                    if self.variant == COUPLED:
                        J_in[rs, self.slice_w(l, k)] = dg_da0[k]
                        J_in[rs, self.slice_w(l, k + 1)] = dg_da1[k]
                        J_in[rs, self.idx_b(l, k)] = _E14[:, 0]
                        J_in[rs, self.idx_b(l, k + 1)] = _E14[:, 1]
                    row += 5
        if self.variant == COUPLED and M:
            o = self._vertex0
            for k in range(N + 1):
                for l in range(M):
                    verts = p.obstacles[l].vertices
                    n_o = verts.shape[0]
                    J_in[o: o + n_o, self.slice_w(l, k)] = -verts
                    J_in[o: o + n_o, self.idx_b(l, k)] = -1.0
                    o += n_o
            for k in range(N + 1):
                for l in range(M):
                    J_in[o, self.slice_w(l, k)] = -2.0 * sched.normals[l, k]
                    o += 1

        out["J_eq"] = J_eq
        out["J_in"] = J_in
        return out


def build(problem: PlanningProblem, variant: str, collision_shift: float = 0.0) -> TranscribedNlp:
    """Validate the problem and construct the transcribed NLP."""
    for name, state in (("start", problem.x_start), ("goal", problem.x_goal)):
        pos = state[:2]
        for i, obs in enumerate(problem.obstacles):
            if point_polytope_distance(pos, obs) < problem.clearance:
                raise RejectedProblemError(
                    f"{name} position is within {problem.clearance} m of obstacle {i}")
    return TranscribedNlp(problem, variant, collision_shift=collision_shift)
