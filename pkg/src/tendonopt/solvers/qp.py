"""Dense convex quadratic programming for small problems.

Solves

    min 1/2 x^T H x + g^T x
    s.t. A_eq x = b_eq,  A_in x <= b_in,  x >= lb  (lb entries may be -inf)

with H symmetric positive semidefinite (possibly singular). The method is a
primal active-set iteration: a feasible start comes from a nonnegative
least-squares phase 1, equality-constrained subproblems are solved on the
working-set nullspace via rank-revealing least squares, and optimality is
certified by a sign-constrained multiplier fit. Everything is deterministic.

When H = factor^T factor the caller can pass the factor to avoid squaring
the conditioning (the grasp stability metric does this with its residual
matrix).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nnls import solve_nnls


class QpError(RuntimeError):
    pass


class QpInfeasibleError(QpError):
    def __init__(self, residual: float):
        super().__init__(f"constraints are infeasible (phase-1 residual {residual:.3e})")
        self.residual = residual


@dataclass
class QpProblem:
    H: np.ndarray | None  # (n, n) PSD; may be None when factor is given
    g: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None
    lb: np.ndarray | None = None  # default: unbounded below
    factor: np.ndarray | None = None  # H = factor^T factor

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float).ravel()
        n = self.g.shape[0]
        if self.factor is not None:
            self.factor = np.atleast_2d(np.asarray(self.factor, dtype=float))
            if self.H is None:
                self.H = self.factor.T @ self.factor
        self.H = np.asarray(self.H, dtype=float)
        if self.H.shape != (n, n):
            raise QpError(f"H must be ({n}, {n}), got {self.H.shape}")
        if np.max(np.abs(self.H - self.H.T), initial=0.0) > 1e-8 * (1 + np.max(np.abs(self.H))):
            raise QpError("H is not symmetric")
        if self.factor is None:
            floor = -1e-9 * max(1.0, float(np.max(np.abs(self.H))))
            if np.min(np.linalg.eigvalsh(self.H)) < floor:
                raise QpError("H is not positive semidefinite")
        self.A_eq = _as_matrix(self.A_eq, n)
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0])
        self.A_in = _as_matrix(self.A_in, n)
        self.b_in = _as_vector(self.b_in, self.A_in.shape[0])
        if self.lb is None:
            self.lb = np.full(n, -np.inf)
        else:
            self.lb = np.asarray(self.lb, dtype=float).ravel()
            if self.lb.shape != (n,):
                raise QpError(f"lb must have length {n}")

    @property
    def n(self) -> int:
        return self.g.shape[0]


def _as_matrix(A, n: int) -> np.ndarray:
    if A is None:
        return np.zeros((0, n))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[1] != n:
        raise QpError(f"constraint matrix has {A.shape[1]} columns, expected {n}")
    return A


def _as_vector(b, m: int) -> np.ndarray:
    if b is None:
        b = np.zeros(m)
    b = np.asarray(b, dtype=float).ravel()
    if b.shape != (m,):
        raise QpError(f"constraint vector has length {b.shape[0]}, expected {m}")
    return b


@dataclass
class QpResult:
    x: np.ndarray
    objective: float
    kkt: dict[str, float] = field(default_factory=dict)
    iterations: int = 0


def find_feasible_point(p: QpProblem, feas_tol: float = 1e-7) -> np.ndarray:
    """Feasible point via NNLS on shifted/split variables plus slacks.

    Raises QpInfeasibleError (with the certificate residual) when the
    constraint system admits no point.
    """
    n = p.n
    finite = np.isfinite(p.lb)
    n_free = int(np.sum(~finite))
    shift = np.where(finite, p.lb, 0.0)
    m_eq, m_in = p.A_eq.shape[0], p.A_in.shape[0]
    if m_eq + m_in == 0:
        return shift.copy()
    stacked = np.vstack([p.A_eq, p.A_in])
    rhs = np.concatenate([p.b_eq - p.A_eq @ shift, p.b_in - p.A_in @ shift])
    cols = [stacked]  # u >= 0 with x = shift + u (- v on free variables)
    if n_free:
        cols.append(-stacked[:, ~finite])
    slack = np.zeros((m_eq + m_in, m_in))
    slack[m_eq:, :] = np.eye(m_in)
    cols.append(slack)
    system = np.hstack(cols)
    if not np.any(system):
        residual = float(np.linalg.norm(rhs))
    else:
        sol, residual = solve_nnls(system, rhs)
    scale = 1.0 + float(np.linalg.norm(rhs))
    if residual > feas_tol * scale:
        raise QpInfeasibleError(residual)
    x = shift + sol[:n]
    if n_free:
        x[~finite] -= sol[n : n + n_free]
    return x


def solve_qp(p: QpProblem, tol: float = 1e-10, start: np.ndarray | None = None,
             max_iter: int | None = None) -> QpResult:
    """Active-set solve; raises QpInfeasibleError when no feasible point exists.

    The result's ``kkt`` dict reports stationarity, primal feasibility and
    complementarity residuals, verified with sign-constrained multipliers.
    """
    n = p.n
    m_eq, m_in = p.A_eq.shape[0], p.A_in.shape[0]
    finite = np.isfinite(p.lb)
    if max_iter is None:
        max_iter = 60 * (n + m_eq + m_in + 2)

    if start is not None:
        x = np.asarray(start, dtype=float).copy()
    else:
        x = find_feasible_point(p)
    x[finite] = np.maximum(x[finite], p.lb[finite])

    scale0 = 1.0 + float(np.max(np.abs(x), initial=0.0))
    act_tol = max(100.0 * tol, 1e-11) * scale0
    in_active = (p.A_in @ x - p.b_in >= -act_tol) if m_in else np.zeros(0, dtype=bool)
    lb_active = finite & (x - p.lb <= act_tol)
    eps = np.finfo(float).eps

    for it in range(1, max_iter + 1):
        rows = np.vstack([p.A_eq, p.A_in[in_active], np.eye(n)[lb_active]])
        if rows.size and np.any(rows):
            _, sv, vt = np.linalg.svd(rows)
            rank_tol = (sv[0] if sv.size else 0.0) * max(rows.shape) * eps
            Z = vt[int(np.sum(sv > rank_tol)):].T
        else:
            Z = np.eye(n)

        step = np.zeros(n)
        if Z.shape[1]:
            if p.factor is not None and not np.any(p.g):
                # solve min ||factor (x + Z y)|| directly on the factor
                y = np.linalg.lstsq(p.factor @ Z, -(p.factor @ x), rcond=None)[0]
            else:
                B = Z.T @ (p.H @ Z)
                q = Z.T @ (p.H @ x + p.g)
                y = np.linalg.lstsq(B, -q, rcond=None)[0]
                if np.linalg.norm(B @ y + q) > 1e-7 * (1.0 + np.linalg.norm(q)):
                    raise QpError("objective is unbounded on the working set")
            step = Z @ y

        scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
        if np.max(np.abs(step), initial=0.0) <= 1e-13 * scale:
            g0 = p.H @ x + p.g
            normals = [p.A_eq[i] for i in range(m_eq)]
            kinds: list[tuple[str, int]] = [("eq", i) for i in range(m_eq)]
            for i in np.where(in_active)[0]:
                normals.append(p.A_in[i])
                kinds.append(("in", int(i)))
            for i in np.where(lb_active)[0]:
                e = np.zeros(n)
                e[i] = -1.0  # bound written as -x <= -lb
                normals.append(e)
                kinds.append(("lb", int(i)))
            if normals:
                Nmat = np.stack(normals, axis=1)
                lam = np.linalg.lstsq(Nmat, -g0, rcond=None)[0]
            else:
                lam = np.zeros(0)
            mult_tol = max(tol, 1e-11) * (1.0 + float(np.linalg.norm(g0, ord=np.inf)))
            worst, worst_val = None, -mult_tol
            for k, (kind, _) in enumerate(kinds):
                if kind != "eq" and lam[k] < worst_val:
                    worst, worst_val = k, lam[k]
            if worst is None:
                return QpResult(
                    x=x,
                    objective=objective_value(p, x),
                    kkt=kkt_residuals(p, x),
                    iterations=it,
                )
            kind, idx = kinds[worst]
            if kind == "in":
                in_active[idx] = False
            else:
                lb_active[idx] = False
            continue

        # longest feasible step; ties resolve to the lowest constraint index
        alpha = 1.0
        block: tuple[str, int] | None = None
        if m_in:
            rate = p.A_in @ step
            room = p.b_in - p.A_in @ x
            for i in np.where(~in_active & (rate > 1e-13 * scale))[0]:
                a = max(room[i], 0.0) / rate[i]
                if a < alpha - 1e-15:
                    alpha, block = a, ("in", int(i))
        for i in np.where(finite & ~lb_active & (step < -1e-13 * scale))[0]:
            a = max(x[i] - p.lb[i], 0.0) / (-step[i])
            if a < alpha - 1e-15:
                alpha, block = a, ("lb", int(i))
        x = x + alpha * step
        if block is not None:
            kind, idx = block
            if kind == "in":
                in_active[idx] = True
            else:
                lb_active[idx] = True
                x[idx] = p.lb[idx]

    raise QpError(f"active-set iteration limit reached ({max_iter})")


def objective_value(p: QpProblem, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(0.5 * x @ (p.H @ x) + p.g @ x)


def kkt_residuals(p: QpProblem, x, act_tol: float = 1e-7) -> dict[str, float]:
    """KKT residuals at x, certified with sign-constrained multipliers.

    Stationarity is the norm of the best gradient fit over valid multipliers
    (equalities free, active inequalities and bounds nonnegative, fit by
    NNLS); complementarity pairs those multipliers with their slacks.
    """
    x = np.asarray(x, dtype=float)
    finite = np.isfinite(p.lb)
    scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    primal = 0.0
    if p.A_eq.shape[0]:
        primal = max(primal, float(np.max(np.abs(p.A_eq @ x - p.b_eq))))
    slack_in = p.b_in - p.A_in @ x if p.A_in.shape[0] else np.zeros(0)
    if slack_in.size:
        primal = max(primal, float(np.max(-slack_in, initial=0.0)))
    slack_lb = np.where(finite, x - p.lb, np.inf)
    if np.any(finite):
        primal = max(primal, float(np.max(-slack_lb[finite], initial=0.0)))

    g0 = p.H @ x + p.g
    act_in = np.where(slack_in <= act_tol * scale)[0] if slack_in.size else np.array([], int)
    act_lb = np.where(finite & (slack_lb <= act_tol * scale))[0]
    cols = []
    cols += [p.A_eq[i] for i in range(p.A_eq.shape[0])]
    cols += [-p.A_eq[i] for i in range(p.A_eq.shape[0])]  # free sign via split
    cols += [p.A_in[i] for i in act_in]
    for i in act_lb:
        e = np.zeros(p.n)
        e[i] = -1.0
        cols.append(e)
    comp = 0.0
    if cols:
        Nmat = np.stack(cols, axis=1)
        mult, stat = solve_nnls(Nmat, -g0)
        k0 = 2 * p.A_eq.shape[0]
        for j, i in enumerate(act_in):
            comp = max(comp, abs(mult[k0 + j] * slack_in[i]))
        for j, i in enumerate(act_lb):
            comp = max(comp, abs(mult[k0 + len(act_in) + j] * slack_lb[i]))
    else:
        stat = float(np.linalg.norm(g0))
    return {"stationarity": float(stat), "primal": primal, "complementarity": float(comp)}
