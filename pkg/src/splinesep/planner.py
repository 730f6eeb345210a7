"""End-to-end planning: initial guess, inter-iteration hyperplane updates,
solving and final safety certification.

The decoupled path freezes hyperplanes as NLP parameters and re-estimates
them between accepted SQP steps with a two-branch filter: if any knot is in
collision, the flagged (knot, obstacle) pairs are re-solved (LS, 10 deg trust
region); otherwise intervals whose position control polygon intersects an
inflated obstacle are re-solved (QP, 20 deg trust region). The coupled path
keeps hyperplanes as decision variables and runs a single solve.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import sqp, svm, transcription as tr
from .geometry import (hull_polytope_clearance, point_polytope_distance,
                       points_polytope_distance)

THETA_BOUNDS_DEFAULT = math.radians(10.0)
THETA_SEGMENTS_DEFAULT = math.radians(20.0)

# Internal conservatism on the collision bound, so solver-tolerance residuals
# cannot flip certification.
COLLISION_SHIFT = 1e-7


@dataclass
class PlannerConfig:
    variant: str = tr.DECOUPLED
    theta_bounds: float = THETA_BOUNDS_DEFAULT
    theta_segments: float = THETA_SEGMENTS_DEFAULT
    ls_tau: float = svm.DEFAULT_LS_TAU
    settings: sqp.SqpSettings | None = None

    def __post_init__(self):
        for th in (self.theta_bounds, self.theta_segments):
            if not 0.0 < th < math.pi / 2:
                raise ValueError("trust-region angles must lie in (0, 90) degrees")
        if self.settings is None:
            # The decoupled variant needs gradual iterates so the hyperplane
            # updates can track the trajectory; the coupled variant moves its
            # hyperplanes inside the NLP and converges best uncapped.
            if self.variant == tr.DECOUPLED:
                self.settings = sqp.SqpSettings(lm_init=1e-2, step_cap=0.0,
                                                in_step_cap=0.2)
            else:
                # Coupled constraint curvature (hyperplane-position products)
                # is invisible to the Gauss-Newton model; BFGS restores a
                # fast local rate.
                self.settings = sqp.SqpSettings(lm_init=1e-2, step_cap=0.0,
                                                in_step_cap=0.1,
                                                hess_mode="lagrangian")


@dataclass
class HyperplaneUpdateRecord:
    iteration: int
    branch: str  # "bounds" | "segments"
    knot: int
    obstacle: int
    angle: float
    theta_bar: float
    accepted: bool


@dataclass
class CertificationReport:
    ok: bool
    coeff_ok: bool
    sampled_ok: bool
    min_coefficient: float
    min_sampled_clearance: float
    required_clearance: float
    violations: list = field(default_factory=list)  # (interval, obstacle, kind)
    samples_per_interval: int = 1000


@dataclass
class PlanResult:
    status: str  # "success" | "infeasible" | "solver_failure"
    T: float
    states: np.ndarray  # (N+1, 3)
    controls: np.ndarray  # (N, 2)
    position_coeffs: np.ndarray  # (N, 4, 2) Bernstein control points
    schedule: tr.HyperplaneSchedule | None
    trace: sqp.SolveTrace
    certification: CertificationReport | None
    update_log: list[HyperplaneUpdateRecord] = field(default_factory=list)
    timers: svm.SvmTimers = field(default_factory=svm.SvmTimers)
    wall_time: float = 0.0


class Planner:
    def __init__(self, problem: tr.PlanningProblem, config: PlannerConfig | None = None):
        self.problem = problem
        self.config = config or PlannerConfig()
        self.nlp = tr.build(problem, self.config.variant, collision_shift=COLLISION_SHIFT)
        self.timers = svm.SvmTimers()
        self.update_log: list[HyperplaneUpdateRecord] = []

    # ----- initial guess ---------------------------------------------------

    def initial_guess(self):
        """Straight-line knots with LS/QP hyperplanes along the line.

        Returns (z0, schedule); schedule is None without obstacles.
        """
        p = self.problem
        N = p.n_intervals
        start, goal = p.x_start, p.x_goal
        delta = goal[:2] - start[:2]
        dist = float(np.linalg.norm(delta))
        heading = math.atan2(delta[1], delta[0]) if dist > 1e-12 else start[2]
        v_max = float(p.u_ub[0]) if np.isfinite(p.u_ub[0]) else 1.0
        T0 = max(p.t_min * 1.01, min(p.t_max * 0.99, 1.25 * max(dist, 1e-6) / v_max))
        X0 = np.linspace(start[:2], goal[:2], N + 1)
        X = np.column_stack([X0, np.full(N + 1, heading)])
        U = np.tile([dist / T0, 0.0], (N, 1))

        schedule = None
        if p.n_obstacles:
            normals = np.zeros((p.n_obstacles, N + 1, 2))
            offsets = np.zeros((p.n_obstacles, N + 1))
            for l, obs in enumerate(p.obstacles):
                centroid = obs.centroid()
                dists = points_polytope_distance(X[:, :2], obs)
                for k in range(N + 1):
                    pos = X[k, :2]
                    w = svm.separate(pos, obs, dists[k] < p.clearance,
                                     fallback_dir=pos - centroid,
                                     ls_tau=self.config.ls_tau, timers=self.timers)
                    normals[l, k] = w
                    offsets[l, k] = svm.vertex_offset(w, obs)
            schedule = tr.HyperplaneSchedule(normals, offsets)

        z0 = self.nlp.encode(T0, X, U, schedule if self.config.variant == tr.COUPLED else None)
        return z0, schedule

    # ----- inter-iteration hyperplane update (two-step filter) -------------

    def update_hyperplanes(self, z: np.ndarray, schedule: tr.HyperplaneSchedule,
                           iteration: int = -1) -> tr.HyperplaneSchedule:
        p = self.problem
        N = p.n_intervals
        _T, X, _U = self.nlp.decode(z)
        knots = X[:, :2]

        knot_dist = np.stack([points_polytope_distance(knots, obs)
                              for obs in p.obstacles])  # (M, N+1)
        in_coll = knot_dist < p.clearance
        new = schedule.copy()
        if in_coll.any():
            for k in range(N + 1):
                for l in range(p.n_obstacles):
                    if in_coll[l, k]:
                        self._resolve_pair(new, k, l, knots[k], in_collision=True,
                                           theta_bar=self.config.theta_bounds,
                                           branch="bounds", iteration=iteration)
            return new

        coeffs = self.nlp.position_spline_coeffs(z)  # (N, 4, 2)
        # Prefilter: hull-to-obstacle clearance is at least the smallest
        # control-point distance minus the control-polygon diameter, so only
        # intervals below that bound need the exact hull test.
        spread = np.linalg.norm(coeffs[:, :, None, :] - coeffs[:, None, :, :],
                                axis=-1).max(axis=(1, 2))
        segs_coll = []
        for l, obs in enumerate(p.obstacles):
            dmin = points_polytope_distance(coeffs.reshape(-1, 2), obs).reshape(N, 4).min(axis=1)
            for k in np.nonzero(dmin - spread < p.clearance)[0]:
                if hull_polytope_clearance(coeffs[k], obs) < p.clearance:
                    segs_coll.append((int(k), l))
        segs_coll.sort()
        for k, l in segs_coll:
            for knot in (k, k + 1):
                self._resolve_pair(new, knot, l, knots[knot],
                                   in_collision=bool(in_coll[l, knot]),
                                   theta_bar=self.config.theta_segments,
                                   branch="segments", iteration=iteration)
        return new

    def _resolve_pair(self, schedule, k, l, pos, in_collision, theta_bar, branch, iteration):
        obs = self.problem.obstacles[l]
        w_old = schedule.normals[l, k]
        w_new = svm.separate(pos, obs, in_collision, prev_normal=w_old,
                             fallback_dir=pos - obs.centroid(),
                             ls_tau=self.config.ls_tau, timers=self.timers)
        angle = svm.rotation_angle(w_old, w_new)
        w_acc = svm.trust_region_filter(w_old, w_new, theta_bar)
        accepted = angle <= theta_bar
        schedule.normals[l, k] = w_acc
        schedule.offsets[l, k] = svm.vertex_offset(w_acc, obs)
        self.update_log.append(HyperplaneUpdateRecord(
            iteration=iteration, branch=branch, knot=k, obstacle=l,
            angle=angle, theta_bar=theta_bar, accepted=accepted))

    # ----- full plan --------------------------------------------------------

    def plan(self) -> PlanResult:
        t0 = time.perf_counter()
        z0, schedule = self.initial_guess()
        variant = self.config.variant

        if variant == tr.DECOUPLED and self.problem.n_obstacles:
            params = tr.freeze_hyperplanes(schedule)

            def callback(state: sqp.IterationState):
                nonlocal schedule
                schedule = self.update_hyperplanes(state.z, schedule, state.iteration)
                return tr.freeze_hyperplanes(schedule)

            z, trace, _ = sqp.solve(self.nlp, z0, params, callback=callback,
                                    settings=self.config.settings)
        else:
            z, trace, _ = sqp.solve(self.nlp, z0, None, settings=self.config.settings)
            if variant == tr.COUPLED and self.problem.n_obstacles:
                schedule = self.nlp.extract_schedule(z)

        T, X, U = self.nlp.decode(z)
        pos_coeffs = self.nlp.position_spline_coeffs(z)
        cert = None
        status = "solver_failure"
        if trace.status in ("success", "acceptable"):
            cert = certify_arrays(pos_coeffs, schedule, self.problem)
            status = "success" if cert.ok else "solver_failure"
        elif "inconsistent" in trace.message:
            # A stalled elastic phase means the frozen hyperplanes admit no
            # feasible corridor, not that the numerics broke down.
            status = "infeasible"
        result = PlanResult(status=status, T=T, states=X, controls=U,
                            position_coeffs=pos_coeffs, schedule=schedule,
                            trace=trace, certification=cert,
                            update_log=list(self.update_log), timers=self.timers,
                            wall_time=time.perf_counter() - t0)
        return result


def certify_arrays(position_coeffs: np.ndarray, schedule: tr.HyperplaneSchedule | None,
                   problem: tr.PlanningProblem, samples: int = 1000,
                   coeff_tol: float = 1e-9, sample_tol: float = 1e-6) -> CertificationReport:
    """Two independent checks on a candidate trajectory.

    (a) every degree-4 collision Bernstein coefficient >= -coeff_tol;
    (b) dense sampling of each interval: distance from the robot centre to
        every obstacle >= r_v + eps - sample_tol.
    Violations are reported per (interval, obstacle), never raised.
    """
    p = problem
    N = position_coeffs.shape[0]
    required = p.clearance
    violations = []
    min_coeff = np.inf
    min_clear = np.inf

    if p.n_obstacles == 0:
        return CertificationReport(True, True, True, np.inf, np.inf, required,
                                   samples_per_interval=samples)

    # (a) coefficient check from the hyperplane schedule.
    coeff_ok = True
    if schedule is not None:
        e14 = tr._E14
        prod = tr._PROD13
        for k in range(N):
            # Bernstein position control points -> deg-4 product coefficients.
            beta = position_coeffs[k]  # (4, 2)
            for l in range(p.n_obstacles):
                w0, w1 = schedule.normals[l, k], schedule.normals[l, k + 1]
                b0, b1 = schedule.offsets[l, k], schedule.offsets[l, k + 1]
                a = np.stack([w0, w1])  # (2 coeffs, 2 dims)
                g = np.einsum("kij,ic,jc->k", prod, a, beta) + e14 @ [b0, b1] - required
                gmin = float(g.min())
                min_coeff = min(min_coeff, gmin)
                if gmin < -coeff_tol:
                    coeff_ok = False
                    violations.append((k, l, "coefficient"))

    # (b) dense sampling of the position spline against the raw geometry.
    taus = np.linspace(0.0, 1.0, samples)
    m3 = tr._M3
    sampled_ok = True
    for k in range(N):
        mono = np.linalg.solve(m3, position_coeffs[k])  # monomial (4, 2)
        pts = (taus[:, None] ** np.arange(4)[None, :]) @ mono  # (samples, 2)
        for l, obs in enumerate(p.obstacles):
            dmin = float(points_polytope_distance(pts, obs).min())
            min_clear = min(min_clear, dmin)
            if dmin < required - sample_tol:
                sampled_ok = False
                violations.append((k, l, "sampled"))

    ok = coeff_ok and sampled_ok
    return CertificationReport(ok, coeff_ok, sampled_ok, min_coeff, min_clear,
                               required, violations, samples_per_interval=samples)


def plan(problem: tr.PlanningProblem, config: PlannerConfig | None = None) -> PlanResult:
    """Convenience wrapper: build a Planner and run one full plan."""
    return Planner(problem, config).plan()
