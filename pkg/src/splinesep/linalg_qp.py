"""Dense linear-algebra kernel and a small strictly convex QP solver.

Serves two consumers: the LS-SVM saddle-point system (solved through the
Cholesky decomposition of its Schur complement) and the SQP subproblems.
The QP solver is an active-set method (Goldfarb-Idnani dual iteration): it
starts from the unconstrained minimizer, repeatedly adds the most violated
constraint (lowest index on ties) and drops blocking ones, refactorizing the
working-set Schur complement via Cholesky on each change. Deterministic for
identical inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular as _solve_triangular

from .errors import DegenerateLabelsError, NotPositiveDefiniteError


def solve_triangular(a, b, lower=False):
    return _solve_triangular(a, b, lower=lower, check_finite=False)


KKT_TOL = 1e-8


def cholesky_factor(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises NotPositiveDefiniteError with the failing
    pivot index on non-PD input."""
    A = np.asarray(A, dtype=float)
    try:
        # LAPACK fast path; the slow loop below only runs to locate the
        # failing pivot for the error report.
        L = np.linalg.cholesky(A)
        if np.all(np.isfinite(L)):
            return L
    except np.linalg.LinAlgError:
        pass
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        d = A[j, j] - L[j, :j] @ L[j, :j]
        if d <= 0.0 or not np.isfinite(d):
            raise NotPositiveDefiniteError(pivot=j, value=float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B for symmetric positive definite A."""
    L = cholesky_factor(A)
    Y = solve_triangular(L, np.asarray(B, dtype=float), lower=True)
    return solve_triangular(L.T, Y, lower=False)


def assemble_saddle(Z: np.ndarray, labels: np.ndarray, tau: float) -> np.ndarray:
    """Full block matrix [[0, -Gamma^T], [Gamma, Z Z^T + I/tau]] for testing."""
    Z = np.asarray(Z, dtype=float)
    g = np.asarray(labels, dtype=float).reshape(-1)
    nd = g.shape[0]
    M = np.zeros((nd + 1, nd + 1))
    M[0, 1:] = -g
    M[1:, 0] = g
    M[1:, 1:] = Z @ Z.T + np.eye(nd) / tau
    return M


def solve_saddle(Z: np.ndarray, labels: np.ndarray, tau: float):
    """Solve [[0, -Gamma^T], [Gamma, Z Z^T + I/tau]] [b; alpha] = [0; 1].

    Z holds the label-scaled sample rows; solved via the Cholesky-factored
    Schur complement of the positive definite block. Returns (b, alpha).
    """
    Z = np.asarray(Z, dtype=float)
    g = np.asarray(labels, dtype=float).reshape(-1)
    if np.all(g > 0) or np.all(g < 0):
        raise DegenerateLabelsError("all samples share one label; offset b is undetermined")
    if tau <= 0:
        raise ValueError("tau must be positive")
    nd = g.shape[0]
    M = Z @ Z.T + np.eye(nd) / tau
    rhs = np.column_stack([np.ones(nd), g])
    sol = cholesky_solve(M, rhs)
    s1, s2 = sol[:, 0], sol[:, 1]
    denom = float(g @ s2)
    if abs(denom) < 1e-12:
        raise DegenerateLabelsError("Gamma^T s2 vanished; labels degenerate")
    b = float(g @ s1) / denom
    alpha = s1 - b * s2
    return b, alpha


@dataclass
class DenseQp:
    """min 1/2 z^T H z + g^T z  s.t.  A z = b_eq, C z >= d."""

    H: np.ndarray
    g: np.ndarray
    A: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    C: np.ndarray | None = None
    d: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        n = self.g.shape[0]
        if self.H.shape != (n, n):
            raise ValueError("H/g dimension mismatch")
        scale = max(1.0, float(np.abs(self.H).max()))
        if np.abs(self.H - self.H.T).max() > 1e-10 * scale:
            raise ValueError("H must be symmetric to 1e-10")
        for name in ("A", "C"):
            m = getattr(self, name)
            if m is not None:
                m = np.asarray(m, dtype=float)
                if m.ndim != 2 or m.shape[1] != n:
                    raise ValueError(f"{name} has wrong shape {m.shape}")
                setattr(self, name, m)
        if self.A is not None:
            self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(self.A.shape[0])
        if self.C is not None:
            self.d = np.asarray(self.d, dtype=float).reshape(self.C.shape[0])

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def n_eq(self) -> int:
        return 0 if self.A is None else self.A.shape[0]

    @property
    def n_ineq(self) -> int:
        return 0 if self.C is None else self.C.shape[0]


@dataclass
class QpSolution:
    z: np.ndarray
    lam_eq: np.ndarray
    lam_ineq: np.ndarray
    status: str  # "optimal" | "infeasible" | "max_iter"
    iterations: int
    working_set: list[int] = field(default_factory=list)


class _WorkingSet:
    """Active constraint rows; the Schur complement N H^-1 N^T is Cholesky
    refactorized from scratch on every working-set change, with a relative
    pivot threshold serving as the linear-independence test."""

    DEP_TOL = 1e-10

    def __init__(self, n: int, h_inv: np.ndarray):
        self.h_inv = h_inv
        self.idx: list[int] = []
        self.is_eq: list[bool] = []
        self.N = np.zeros((0, n))
        self.NHinv = np.zeros((0, n))
        self.L = np.zeros((0, 0))
        self.lam = np.zeros(0)

    def __len__(self):
        return len(self.idx)

    def step_quantities(self, normal: np.ndarray):
        """Primal direction dz, dual direction r, and curvature for a target
        constraint normal."""
        hn = self.h_inv @ normal
        if len(self.idx) == 0:
            return hn, np.zeros(0), float(normal @ hn), hn
        u = self.NHinv @ normal
        y = solve_triangular(self.L, u, lower=True)
        r = solve_triangular(self.L.T, y, lower=False)
        dz = hn - self.NHinv.T @ r
        return dz, r, float(normal @ dz), hn

    def _pivot(self, normal: np.ndarray, hn: np.ndarray):
        """Schur pivot (l, delta, sigma) for appending one row."""
        sigma = float(normal @ hn)
        if len(self.idx) == 0:
            return np.zeros(0), sigma, sigma
        u = self.NHinv @ normal
        l = solve_triangular(self.L, u, lower=True)
        return l, sigma - float(l @ l), sigma

    def independent(self, normal: np.ndarray, hn: np.ndarray) -> bool:
        _l, delta, sigma = self._pivot(normal, hn)
        return delta > self.DEP_TOL * max(abs(sigma), 1e-300)

    def try_add(self, index: int, normal: np.ndarray, hn: np.ndarray, lam: float,
                is_eq: bool) -> bool:
        """Append a row, extending the factor; False if it would lose rank."""
        l, delta, sigma = self._pivot(normal, hn)
        if delta <= self.DEP_TOL * max(abs(sigma), 1e-300):
            return False
        m = len(self.idx)
        L_new = np.zeros((m + 1, m + 1))
        L_new[:m, :m] = self.L
        L_new[m, :m] = l
        L_new[m, m] = np.sqrt(delta)
        self.L = L_new
        self.N = np.vstack([self.N, normal])
        self.NHinv = np.vstack([self.NHinv, hn])
        self.idx.append(index)
        self.is_eq.append(is_eq)
        self.lam = np.append(self.lam, lam)
        return True

    def drop(self, pos: int):
        self.drop_many((pos,))

    def drop_many(self, positions):
        gone = set(positions)
        keep = [i for i in range(len(self.idx)) if i not in gone]
        self.idx = [self.idx[i] for i in keep]
        self.is_eq = [self.is_eq[i] for i in keep]
        self.N = self.N[keep]
        self.NHinv = self.NHinv[keep]
        self.lam = self.lam[keep]
        if not keep:
            self.L = np.zeros((0, 0))
            return
        # Fresh LAPACK factorization; removes drift from incremental appends.
        S = self.NHinv @ self.N.T
        try:
            self.L = np.linalg.cholesky(0.5 * (S + S.T))
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(pivot=len(keep) - 1,
                                           value=float(np.diag(S).min())) from None


def solve_qp(qp: DenseQp, tol: float = KKT_TOL, max_iter: int | None = None,
             warm_set: list[int] | None = None) -> QpSolution:
    """Solve a strictly convex dense QP; see module docstring for the method.

    warm_set optionally lists inequality rows to pre-activate (typically the
    working set of a previous, similar QP); rows whose multiplier comes out
    negative are dropped again before the main iteration starts.

    Raises NotPositiveDefiniteError if H is not positive definite. Returns
    status "infeasible" when the constraints admit no solution and "max_iter"
    when the cycling guard (default 50 n working-set changes) trips.
    """
    n = qp.n
    if max_iter is None:
        max_iter = max(200, 50 * n)
    H = 0.5 * (qp.H + qp.H.T)
    L = cholesky_factor(H)
    li = solve_triangular(L, np.eye(n), lower=True)
    h_inv = li.T @ li

    z = -(h_inv @ qp.g)
    ws = _WorkingSet(n, h_inv)
    iterations = 0

    def finish(status: str) -> QpSolution:
        nonlocal z
        if status == "optimal" and len(ws.idx):
            # Polish: recompute (z, lam) exactly from the final working set,
            # removing drift accumulated over the active-set path.
            b_act = np.array([qp.b_eq[ci] if ws.is_eq[pos] else qp.d[ci]
                              for pos, ci in enumerate(ws.idx)])
            lam = ws.lam.copy()
            for _ in range(4):  # KKT refinement for ill-conditioned sets
                r1 = -qp.g - qp.H @ z + ws.N.T @ lam  # stationarity residual
                r2 = b_act - ws.N @ z  # active-constraint residual
                rhs = r2 - ws.NHinv @ r1
                y = solve_triangular(ws.L, rhs, lower=True)
                dlam = solve_triangular(ws.L.T, y, lower=False)
                z = z + h_inv @ (r1 + ws.N.T @ dlam)
                lam = lam + dlam
            ws.lam = lam
        lam_eq = np.zeros(qp.n_eq)
        lam_in = np.zeros(qp.n_ineq)
        for pos, cidx in enumerate(ws.idx):
            if ws.is_eq[pos]:
                lam_eq[cidx] = ws.lam[pos]
            else:
                lam_in[cidx] = max(0.0, ws.lam[pos])
        return QpSolution(z=z, lam_eq=lam_eq, lam_ineq=lam_in, status=status,
                          iterations=iterations,
                          working_set=[ci for ci, e in zip(ws.idx, ws.is_eq) if not e])

    # Equality constraints first; they never leave the working set. Batched
    # append (one LAPACK factorization) with a sequential fallback when the
    # rows are dependent.
    if qp.n_eq:
        NH = qp.A @ h_inv
        S = NH @ qp.A.T
        try:
            ws.L = np.linalg.cholesky(0.5 * (S + S.T))
            ws.N = qp.A.copy()
            ws.NHinv = NH
            ws.idx = list(range(qp.n_eq))
            ws.is_eq = [True] * qp.n_eq
            y = solve_triangular(ws.L, qp.b_eq - qp.A @ z, lower=True)
            lam = solve_triangular(ws.L.T, y, lower=False)
            z = z + NH.T @ lam
            ws.lam = lam
            iterations += qp.n_eq
        except np.linalg.LinAlgError:
            for i in range(qp.n_eq):
                a = qp.A[i]
                b = qp.b_eq[i]
                resid = b - float(a @ z)
                normal = a
                dz, r, kappa, hn = ws.step_quantities(normal)
                if not (ws.independent(normal, hn)
                        and ws.try_add(i, normal, hn, 0.0, is_eq=True)):
                    # Dependent row: consistent -> skip, else infeasible.
                    if abs(resid) <= 1e-7 * max(1.0, abs(b)):
                        continue
                    return finish("infeasible")
                t = resid / kappa
                z = z + t * dz
                if len(ws.lam) > 1:
                    ws.lam[:-1] -= t * r
                ws.lam[-1] = t
                iterations += 1

    if qp.n_ineq == 0:
        return finish("optimal")

    if warm_set:
        # Pre-activate the hinted rows, jump to the optimum of the resulting
        # equality-constrained problem, then drop negative-multiplier rows
        # until the working set is dual feasible.
        present = set(ci for ci, e in zip(ws.idx, ws.is_eq) if not e)
        cand = [i for i in warm_set if 0 <= i < qp.n_ineq and i not in present]
        added = False
        if cand:
            # Batched append: one LAPACK factorization instead of per-row
            # incremental extensions.
            Nc = qp.C[cand]
            N_all = np.vstack([ws.N, Nc])
            NH_all = N_all @ h_inv
            S = NH_all @ N_all.T
            try:
                L_all = np.linalg.cholesky(0.5 * (S + S.T))
                ws.N, ws.NHinv, ws.L = N_all, NH_all, L_all
                ws.idx.extend(cand)
                ws.is_eq.extend([False] * len(cand))
                ws.lam = np.concatenate([ws.lam, np.zeros(len(cand))])
                added = True
                iterations += len(cand)
            except np.linalg.LinAlgError:
                # Hint contains dependent rows; add what fits one by one.
                for i in cand:
                    normal = qp.C[i]
                    hn = h_inv @ normal
                    if ws.try_add(i, normal, hn, 0.0, is_eq=False):
                        added = True
                        iterations += 1
        z_free = -(h_inv @ qp.g)
        while added:
            if not len(ws.idx):
                z = z_free
                break
            b_act = np.array([qp.b_eq[ci] if ws.is_eq[pos] else qp.d[ci]
                              for pos, ci in enumerate(ws.idx)])
            y = solve_triangular(ws.L, b_act - ws.N @ z_free, lower=True)
            lam = solve_triangular(ws.L.T, y, lower=False)
            z = z_free + ws.NHinv.T @ lam
            ws.lam = lam
            neg = [pos for pos in range(len(ws.idx))
                   if not ws.is_eq[pos] and lam[pos] < -tol]
            if not neg:
                break
            ws.drop_many(neg)
            iterations += len(neg)

    C, d = qp.C, qp.d
    feas_scale = np.maximum(1.0, np.abs(d))
    while True:
        viol = d - C @ z
        rel = viol / feas_scale
        target = int(np.argmax(rel))
        if rel[target] <= tol:
            return finish("optimal")
        normal = C[target]
        bound = d[target]
        lam_target = 0.0
        while True:
            if iterations >= max_iter:
                return finish("max_iter")
            dz, r, kappa, hn = ws.step_quantities(normal)
            indep = ws.independent(normal, hn)
            # Dual blocking step over inequality members only.
            t1 = np.inf
            block = -1
            if len(ws.idx):
                open_rows = (~np.asarray(ws.is_eq)) & (r > tol)
                if open_rows.any():
                    cand = np.where(open_rows, ws.lam / np.where(open_rows, r, 1.0), np.inf)
                    block = int(np.argmin(cand))
                    t1 = float(cand[block])
            t2 = (bound - float(normal @ z)) / kappa if indep else np.inf
            if indep and t2 <= t1:
                # Full primal step: target becomes active. The refactorizing
                # append re-checks independence before the iterate moves.
                if ws.try_add(target, normal, hn, 0.0, is_eq=False):
                    z = z + t2 * dz
                    if len(ws.lam) > 1:
                        ws.lam[:-1] -= t2 * r
                    ws.lam[-1] = lam_target + t2
                    iterations += 1
                    break
                indep = False
                t2 = np.inf
            t = t1
            if not np.isfinite(t):
                return finish("infeasible")
            if indep:
                z = z + t * dz  # dz vanishes exactly in the pure dual case
            if len(ws.lam):
                ws.lam = ws.lam - t * r
            lam_target += t
            # Partial (or pure dual) step: drop the blocking constraint.
            ws.drop(block)
            iterations += 1


def kkt_residuals(qp: DenseQp, sol: QpSolution) -> dict:
    """Stationarity / feasibility / complementarity residuals of a solution."""
    r_stat = qp.H @ sol.z + qp.g
    if qp.n_eq:
        r_stat = r_stat - qp.A.T @ sol.lam_eq
    if qp.n_ineq:
        r_stat = r_stat - qp.C.T @ sol.lam_ineq
    out = {"stationarity": float(np.abs(r_stat).max()) if qp.n else 0.0}
    out["eq_feasibility"] = float(np.abs(qp.A @ sol.z - qp.b_eq).max()) if qp.n_eq else 0.0
    if qp.n_ineq:
        slack = qp.C @ sol.z - qp.d
        out["ineq_feasibility"] = float(max(0.0, -slack.min()))
        out["complementarity"] = float(np.abs(sol.lam_ineq * slack).max())
        out["dual_feasibility"] = float(max(0.0, -sol.lam_ineq.min()))
    else:
        out["ineq_feasibility"] = out["complementarity"] = out["dual_feasibility"] = 0.0
    return out
