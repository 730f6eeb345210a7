"""Dense SQP solver with an l1 merit line search and a between-iteration
callback.

The callback runs after every accepted major step and may replace only the
parameter vector (frozen hyperplanes), never the iterate; after a parameter
change the merit baseline is recomputed and the convergence streak resets.
Success requires two consecutive KKT-satisfying iterations with no parameter
change.

The Hessian model is Gauss-Newton (objective curvature only) plus Levenberg
damping, doubled on rejected steps. Subproblems go through the dense
active-set QP solver; an elastic retry with one shared slack variable covers
inconsistent constraint linearizations.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefiniteError
from .linalg_qp import DenseQp, QpSolution, solve_qp

# Inequality rows with residual below this margin receive elastic slacks on
# the first (restricted) elastic retry; rows further from their bound cannot
# cause the inconsistency and keeping them rigid shrinks the subproblem.
_ELASTIC_MARGIN = 0.5


@dataclass
class SqpSettings:
    kkt_tol: float = 1e-6
    feas_tol: float = 1e-8
    max_major_iters: int = 200
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12
    lm_damping: float = 1e-6
    lm_init: float = 1.0
    lm_max: float = 1e8
    penalty_init: float = 1.0
    qp_max_iter: int | None = None
    # Largest equality-violation reduction requested from one subproblem;
    # caps the minimum-norm step when the iterate is far from feasible.
    eq_step_cap: float = 0.5
    # Largest inequality-violation reduction requested per subproblem. Keeps
    # feasibility restoration gradual, so that between-iteration parameter
    # updates (hyperplane re-estimation) can track the iterate.
    in_step_cap: float = 0.1
    # Cap on the infinity norm of one accepted step (0 disables). Gradual
    # iterates are required for the same reason as in_step_cap.
    step_cap: float = 0.25
    # Abort after this many consecutive elastic iterations whose total
    # inequality-violation progress is under half an in_step_cap (a healthy
    # restoration shrinks the violation by about in_step_cap per iteration).
    # A persistent elastic phase means the frozen parameters make the
    # linearized inequalities mutually inconsistent, and no amount of
    # grinding recovers from that.
    elastic_stall_iters: int = 12
    # Hessian model: "gn" uses the NLP's Gauss-Newton diagonal; "bfgs" builds
    # a Powell-damped BFGS approximation of the Lagrangian Hessian, which
    # restores fast local convergence when constraint curvature dominates
    # (e.g. bilinear hyperplane-position products).
    hess_mode: str = "gn"
    # Acceptable-level termination (0 iterations disables it). Degenerate
    # problems can have optimal limit points that are not KKT points for any
    # multiplier choice (constraint-qualification failure), so the KKT
    # residual plateaus while the iterate is feasible and the objective has
    # stopped moving. After acceptable_iters consecutive iterations with
    # residual <= acceptable_kkt and relative objective change below
    # acceptable_obj_tol, feasibility is polished to feas_tol and the solve
    # returns status "acceptable".
    acceptable_iters: int = 15
    acceptable_kkt: float = 1e-2
    acceptable_obj_tol: float = 1e-5

    def __post_init__(self):
        if self.kkt_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class TraceRow:
    iteration: int
    objective: float
    constraint_violation: float
    step_norm: float
    wall_time: float
    kkt_residual: float
    params_changed: bool


@dataclass
class SolveTrace:
    rows: list[TraceRow] = field(default_factory=list)
    status: str = "running"
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.rows)


def _violation_l1(c_eq: np.ndarray, c_in: np.ndarray) -> float:
    v = float(np.sum(np.abs(c_eq))) if c_eq.size else 0.0
    if c_in.size:
        v += float(np.sum(np.maximum(0.0, -c_in)))
    return v


def _violation_inf(c_eq: np.ndarray, c_in: np.ndarray) -> float:
    v = float(np.abs(c_eq).max()) if c_eq.size else 0.0
    if c_in.size:
        v = max(v, float(max(0.0, -c_in.min())))
    return v


def _solve_subproblem(H, grad, c_eq, J_eq, c_in, J_in, penalty, qp_max_iter,
                      beta=1.0, beta_in=1.0, warm=None):
    """QP direction; falls back to a per-row elastic relaxation of the
    inequalities when the plain subproblem is infeasible. beta / beta_in
    scale the requested equality / inequality violation correction (partial
    steps far from feasibility). warm carries active-set hints between major
    iterations."""
    n = grad.shape[0]
    d_in = None
    if c_in.size:
        d_in = -c_in.copy()
        if beta_in < 1.0:
            violated = c_in < 0.0
            d_in[violated] = -beta_in * c_in[violated]
    qp = DenseQp(H=H, g=grad,
                 A=J_eq if c_eq.size else None,
                 b_eq=-beta * c_eq if c_eq.size else None,
                 C=J_in if c_in.size else None,
                 d=d_in)
    sol = solve_qp(qp, max_iter=qp_max_iter,
                   warm_set=None if warm is None else warm.get("plain"))
    if warm is not None:
        warm["plain"] = sol.working_set
    if sol.status == "optimal":
        return sol.z, sol, False
    # Elastic retry with slacks on the inequality rows, so the subproblem
    # minimizes the linearized l1 merit:
    #   min ... + nu*sum(s) + eps/2 |s|^2, J_in p + s >= d_in, s >= 0.
    # Slacks go to tight-or-violated rows first (the only plausible sources
    # of inconsistency), with a full retry if that subset was too small.
    m = c_in.shape[0]
    nu = min(max(2.0 * penalty, 10.0), 1e8)
    sol_e = sol
    for rows in (np.nonzero(c_in < _ELASTIC_MARGIN)[0], np.arange(m)):
        ms = rows.shape[0]
        if ms == 0:
            continue
        He = np.zeros((n + ms, n + ms))
        He[:n, :n] = H
        He[n:, n:] = 1e-2 * np.eye(ms)
        ge = np.concatenate([grad, np.full(ms, nu)])
        Ae = np.hstack([J_eq, np.zeros((J_eq.shape[0], ms))]) if c_eq.size else None
        Ce = np.zeros((m + ms, n + ms))
        Ce[:m, :n] = J_in
        Ce[rows, n + np.arange(ms)] = 1.0
        Ce[m:, n:] = np.eye(ms)
        de = np.concatenate([d_in, np.zeros(ms)])
        warm_e = None
        if warm is not None:
            # Elastic rows 0..m-1 mirror the plain inequality rows; slack-row
            # hints from earlier calls may not line up, so keep only these.
            warm_e = [i for i in (warm.get("elastic") or warm.get("plain") or [])
                      if i < m]
        sol_e = solve_qp(DenseQp(H=He, g=ge, A=Ae,
                                 b_eq=-beta * c_eq if c_eq.size else None,
                                 C=Ce, d=de), max_iter=qp_max_iter, warm_set=warm_e)
        if warm is not None:
            warm["elastic"] = sol_e.working_set
        if sol_e.status == "optimal":
            z = sol_e.z[:n]
            trimmed = QpSolution(z=z, lam_eq=sol_e.lam_eq,
                                 lam_ineq=sol_e.lam_ineq[:m],
                                 status="optimal", iterations=sol_e.iterations,
                                 working_set=sol_e.working_set)
            return z, trimmed, True
        if ms == m:
            break
    return None, sol_e, True


def _bfgs_update(B, prev, z, grad, J_eq, J_in, lam_eq, lam_in, n):
    """Powell-damped BFGS update of the Lagrangian Hessian approximation.

    Uses the most recent QP multipliers for both gradient evaluations, so the
    secant pair reflects pure curvature along the last accepted step. Damping
    keeps B positive definite even when the true Lagrangian is indefinite.
    """
    if B is None:
        B = np.eye(n)
    if prev is None:
        return B
    z0, g0, Je0, Ji0 = prev
    s_vec = z - z0
    if float(np.linalg.norm(s_vec)) < 1e-14:
        return B

    def grad_lag(g, Je, Ji):
        r = g.copy()
        if lam_eq is not None and lam_eq.size:
            r -= Je.T @ lam_eq
        if lam_in is not None and lam_in.size:
            r -= Ji.T @ lam_in
        return r

    y = grad_lag(grad, J_eq, J_in) - grad_lag(g0, Je0, Ji0)
    sy = float(s_vec @ y)
    if np.allclose(B, np.eye(n)) and sy > 1e-12:
        # Scale the initial metric to the first observed curvature.
        B = float((y @ y) / sy) * np.eye(n)
    Bs = B @ s_vec
    sBs = float(s_vec @ Bs)
    if sBs <= 1e-16:
        return B
    if sy < 0.2 * sBs:
        theta = 0.8 * sBs / (sBs - sy)
        y = theta * y + (1.0 - theta) * Bs
        sy = float(s_vec @ y)
    if sy <= 1e-16:
        return B
    B = B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy
    return 0.5 * (B + B.T)


def _polish_feasibility(nlp, z, params, max_iters: int = 10, tol: float = 1e-10):
    """Gauss-Newton restoration onto the constraint manifold.

    Minimum-norm correction from the equality residuals and the violated
    inequality rows only; the iterate barely moves, so the objective is
    unchanged to first order.
    """
    z = z.copy()
    for _ in range(max_iters):
        lin = nlp.linearize(z, params, with_jacobian=True)
        c_eq, c_in = lin["c_eq"], lin["c_in"]
        if _violation_inf(c_eq, c_in) <= tol:
            break
        vrows = np.nonzero(c_in < 0.0)[0] if c_in.size else np.empty(0, dtype=int)
        parts_j, parts_r = [], []
        if c_eq.size:
            parts_j.append(lin["J_eq"])
            parts_r.append(-c_eq)
        if vrows.size:
            parts_j.append(lin["J_in"][vrows])
            parts_r.append(-c_in[vrows])
        if not parts_j:
            break
        dp = np.linalg.lstsq(np.vstack(parts_j), np.concatenate(parts_r),
                             rcond=None)[0]
        z += dp
    return z


@dataclass
class IterationState:
    """Snapshot handed to the between-iterations callback."""

    iteration: int
    z: np.ndarray
    params: np.ndarray | None
    objective: float
    constraint_violation: float


def solve(nlp, z0: np.ndarray, params0: np.ndarray | None = None,
          callback=None, settings: SqpSettings | None = None):
    """Solve the NLP; returns (z, trace, info).

    nlp must provide num_vars and linearize(z, params, with_jacobian) ->
    dict(f, grad, c_eq, J_eq, c_in, J_in, hess_diag) and may provide
    hessian(z, params) for an exact PSD Hessian model. The callback, if
    given, is called after each accepted step with an IterationState and may
    return a replacement parameter vector (or None to keep the current one).
    """
    s = settings or SqpSettings()
    z = np.asarray(z0, dtype=float).copy()
    if z.shape[0] != nlp.num_vars:
        raise ValueError(f"z0 has length {z.shape[0]}, expected {nlp.num_vars}")
    params = None if params0 is None else np.asarray(params0, dtype=float).copy()

    trace = SolveTrace()
    t_start = time.perf_counter()
    lam_damp = max(s.lm_init, s.lm_damping)
    penalty = s.penalty_init
    streak = 0
    lam_eq = lam_in = None
    n = nlp.num_vars
    warm: dict = {}  # QP working-set hints carried across major iterations
    stall_count = 0
    stall_viol0 = np.inf
    acc_streak = 0
    f_prev = np.inf
    B = None  # BFGS approximation of the Lagrangian Hessian
    prev = None  # (z, grad, J_eq, J_in) from the previous major iteration

    for major in range(s.max_major_iters):
        lin = nlp.linearize(z, params, with_jacobian=True)
        fval, grad = lin["f"], lin["grad"]
        c_eq, c_in = lin["c_eq"], lin["c_in"]
        J_eq, J_in = lin["J_eq"], lin["J_in"]
        viol_inf = _violation_inf(c_eq, c_in)

        if s.hess_mode == "bfgs":
            B = _bfgs_update(B, prev, z, grad, J_eq, J_in, lam_eq, lam_in, n)
            prev = (z.copy(), grad, J_eq, J_in)
            H_model = B
        elif s.hess_mode == "lagrangian":
            # Exact constraint curvature only helps (and is only trustworthy)
            # near feasibility; far away the multiplier estimates blow up and
            # feed back into ever-larger indefinite Hessian blocks.
            lam_big = 0.0
            if lam_in is not None and lam_in.size:
                lam_big = float(np.abs(lam_in).max())
            if viol_inf <= 1e-3 and lam_big < 1e3:
                H_model = nlp.lagrangian_hessian(z, params, lam_eq, lam_in)
            else:
                H_model = np.diag(lin["hess_diag"])
        elif hasattr(nlp, "hessian"):
            H_model = np.asarray(nlp.hessian(z, params), dtype=float)
        else:
            H_model = np.diag(lin["hess_diag"])

        # Solve the subproblem, doubling damping on rejected steps.
        accepted = False
        step_norm = 0.0
        kkt = np.inf
        while not accepted:
            H = H_model + lam_damp * np.eye(n)
            viol_eq = float(np.abs(c_eq).max()) if c_eq.size else 0.0
            beta = min(1.0, s.eq_step_cap / viol_eq) if viol_eq > s.eq_step_cap else 1.0
            viol_in = float(max(0.0, -c_in.min())) if c_in.size else 0.0
            beta_in = min(1.0, s.in_step_cap / viol_in) if viol_in > s.in_step_cap else 1.0
            try:
                p, qp_sol, elastic = _solve_subproblem(
                    H, grad, c_eq, J_eq, c_in, J_in, penalty, s.qp_max_iter,
                    beta=beta, beta_in=beta_in, warm=warm)
            except (NotPositiveDefiniteError, np.linalg.LinAlgError):
                # Numerically fragile subproblem: retry with more damping.
                lam_damp *= 10.0
                if lam_damp > s.lm_max:
                    trace.status = "failure"
                    trace.message = f"subproblem factorization failed at iteration {major}"
                    return z, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
                continue
            if p is None:
                trace.status = "failure"
                trace.message = f"QP subproblem {qp_sol.status} at iteration {major}"
                return z, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
            lam_eq, lam_in = qp_sol.lam_eq, qp_sol.lam_ineq

            # KKT residual at the current iterate with fresh multipliers.
            r_stat = grad.copy()
            if c_eq.size:
                r_stat -= J_eq.T @ lam_eq
            if c_in.size:
                r_stat -= J_in.T @ lam_in
            comp = float(np.abs(lam_in * c_in).max()) if c_in.size else 0.0
            kkt = max(float(np.abs(r_stat).max()), viol_inf, comp)

            if not elastic and kkt <= s.kkt_tol and viol_inf <= s.feas_tol:
                streak += 1
                trace.rows.append(TraceRow(major, fval, viol_inf, 0.0,
                                           time.perf_counter() - t_start, kkt, False))
                if streak >= 2:
                    trace.status = "success"
                    return z, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
                accepted = True  # no step needed; let the callback run
                p = np.zeros(n)
                break

            if elastic:
                # Elastic multipliers are dominated by the slack weight and
                # would blow the penalty up; grow it geometrically instead.
                penalty = min(penalty * 2.0, 1e7)
            else:
                lam_max = 0.0
                if lam_eq.size:
                    lam_max = max(lam_max, float(np.abs(lam_eq).max()))
                if lam_in.size:
                    lam_max = max(lam_max, float(np.abs(lam_in).max()))
                penalty = max(penalty, 1.5 * lam_max + 1.0)

            # l1 merit line search (Armijo with backtracking). The predicted
            # violation after a full linearized step is nonzero on elastic
            # iterations; the merit slope accounts for it.
            viol1 = _violation_l1(c_eq, c_in)
            viol1_pred = _violation_l1(c_eq + J_eq @ p if c_eq.size else c_eq,
                                       c_in + J_in @ p if c_in.size else c_in)
            phi0 = fval + penalty * viol1
            deriv = float(grad @ p) - penalty * (viol1 - viol1_pred)
            alpha = 1.0
            p_inf = float(np.abs(p).max()) if p.size else 0.0
            if s.step_cap > 0.0 and p_inf > s.step_cap:
                alpha = s.step_cap / p_inf
            soc_tried = False
            found = False
            while alpha >= s.min_step:
                z_trial = z + alpha * p
                lt = nlp.linearize(z_trial, params, with_jacobian=False)
                phi = lt["f"] + penalty * _violation_l1(lt["c_eq"], lt["c_in"])
                if phi <= phi0 + s.armijo_c1 * alpha * min(deriv, 0.0):
                    found = True
                    break
                if not soc_tried:
                    # Second-order correction: a least-norm feasibility shift
                    # built from the residuals at the trial point, so that
                    # quadratic constraint regrowth (Maratos effect) cannot
                    # force the merit to reject an otherwise good step.
                    soc_tried = True
                    vrows = np.nonzero(lt["c_in"] < 0.0)[0] if c_in.size else np.empty(0, dtype=int)
                    Js = np.vstack([J_eq, J_in[vrows]]) if c_eq.size or vrows.size else None
                    if Js is not None and Js.size:
                        rhs = np.concatenate([-lt["c_eq"], -lt["c_in"][vrows]])
                        dp = np.linalg.lstsq(Js, rhs, rcond=None)[0]
                        z_soc = z_trial + dp
                        ls = nlp.linearize(z_soc, params, with_jacobian=False)
                        phi_s = ls["f"] + penalty * _violation_l1(ls["c_eq"], ls["c_in"])
                        if phi_s <= phi0 + s.armijo_c1 * alpha * min(deriv, 0.0):
                            z_trial, phi, found = z_soc, phi_s, True
                            break
                alpha *= s.backtrack
            if not found:
                lam_damp *= 2.0
                if lam_damp > s.lm_max:
                    trace.status = "failure"
                    trace.message = f"line search stalled at iteration {major}"
                    return z, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
                continue  # rejected step: re-solve with more damping

            step_norm = float(np.linalg.norm(z_trial - z))
            z = z_trial
            # Damping tracks step quality: grow it when the merit gained much
            # less than the linear model promised, shrink it on good steps.
            actual = phi0 - phi
            # Model decrease of the merit along alpha*p, including the
            # quadratic term the subproblem paid for.
            predicted = -alpha * deriv - 0.5 * alpha * alpha * float(p @ (H @ p))
            if predicted > 0 and actual < 0.25 * predicted:
                lam_damp = min(s.lm_max, lam_damp * 4.0)
            elif predicted <= 0 or actual > 0.75 * predicted:
                lam_damp = max(s.lm_damping, lam_damp * 0.5)
            streak = 0
            accepted = True
            trace.rows.append(TraceRow(major, fval, viol_inf, step_norm,
                                       time.perf_counter() - t_start, kkt, False))

        # Acceptable-level exit: feasible, stationarity plateaued, objective
        # no longer moving. Polish feasibility and stop rather than grinding
        # out the remaining iterations against a degenerate valley.
        if (s.acceptable_iters > 0 and not elastic
                and kkt <= s.acceptable_kkt and viol_inf <= 1e-5
                and abs(fval - f_prev) <= s.acceptable_obj_tol * (1.0 + abs(fval))):
            acc_streak += 1
        else:
            acc_streak = 0
        f_prev = fval
        if acc_streak >= s.acceptable_iters:
            z_pol = _polish_feasibility(nlp, z, params)
            lin_pol = nlp.linearize(z_pol, params, with_jacobian=False)
            if _violation_inf(lin_pol["c_eq"], lin_pol["c_in"]) <= s.feas_tol:
                trace.status = "acceptable"
                trace.message = ("stationarity stagnated below acceptable "
                                 "tolerance; feasibility polished")
                return z_pol, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
            acc_streak = 0  # polish failed; keep iterating

        # Fail fast when the elastic phase makes no feasibility progress: the
        # linearized inequalities stay inconsistent under the current frozen
        # parameters and later iterations only repeat the same relaxation.
        if elastic:
            required = 0.5 * s.in_step_cap
            if stall_viol0 - viol_inf >= required:
                stall_viol0 = viol_inf
                stall_count = 0
            else:
                stall_count += 1
            if stall_count >= s.elastic_stall_iters:
                trace.status = "failure"
                trace.message = ("inconsistent inequality linearizations: "
                                 f"elastic phase stalled at iteration {major}")
                return z, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
        else:
            stall_count = 0
            stall_viol0 = np.inf

        # Between-iterations hook: may replace only the parameter vector.
        if callback is not None:
            state = IterationState(iteration=major, z=z.copy(),
                                   params=None if params is None else params.copy(),
                                   objective=fval, constraint_violation=viol_inf)
            new_params = callback(state)
            if new_params is not None and (
                    params is None or not np.array_equal(new_params, params)):
                params = np.asarray(new_params, dtype=float).copy()
                streak = 0
                acc_streak = 0
                trace.rows[-1].params_changed = True

    trace.status = "failure"
    trace.message = "maximum major iterations exhausted"
    return z, trace, {"lam_eq": lam_eq, "lam_in": lam_in}
