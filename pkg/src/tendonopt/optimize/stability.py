"""Post-contact grasp stability metric.

For one grasp and one actuation matrix the metric is the minimal norm of the
unbalanced joint torque J^T D beta - A t_net over contact-force weights and
net tendon tensions, subject to object equilibrium, friction pyramid
membership, nonnegativity, and a unit-sum joint-torque normalization that
rules out the all-zero solution. The result is a unitless normalized torque.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contact import GraspMatrices
from ..solvers import QpInfeasibleError, QpProblem, find_feasible_point, solve_qp


@dataclass(frozen=True)
class StabilityResult:
    beta: np.ndarray
    t_net: np.ndarray
    delta_tau: np.ndarray  # J^T D beta - A t_net, unbalanced joint torques
    metric: float  # norm of delta_tau; inf when the grasp is infeasible
    feasible: bool
    kkt: dict | None = None


def _build_problem(gm: GraspMatrices, A: np.ndarray) -> tuple[QpProblem, int]:
    n_beta = gm.D.shape[1]
    n_t = A.shape[1]
    dim = n_beta + n_t
    JtD = gm.J.T @ gm.D
    Q = np.hstack([JtD, -A])
    A_eq = np.zeros((7, dim))
    A_eq[:6, :n_beta] = gm.G @ gm.D
    A_eq[6, :n_beta] = np.ones(JtD.shape[0]) @ JtD
    b_eq = np.zeros(7)
    b_eq[6] = 1.0
    A_in = np.zeros((gm.F.shape[0], dim))
    A_in[:, :n_beta] = gm.F
    problem = QpProblem(
        H=None,
        g=np.zeros(dim),
        A_eq=A_eq,
        b_eq=b_eq,
        A_in=A_in,
        b_in=np.zeros(gm.F.shape[0]),
        lb=np.zeros(dim),
        factor=Q,
    )
    return problem, n_beta


def stability_start(gm: GraspMatrices, n_tendons: int) -> np.ndarray | None:
    """Feasible starting point, or None when the grasp admits none.

    The constraint set does not involve the actuation matrix, so one phase-1
    solve per grasp serves every candidate parameter vector.
    """
    problem, _ = _build_problem(gm, np.zeros((gm.J.shape[1], n_tendons)))
    try:
        return find_feasible_point(problem)
    except QpInfeasibleError:
        return None


def grasp_stability_qp(
    gm: GraspMatrices,
    A: np.ndarray,
    tol: float = 1e-10,
    start: np.ndarray | None = None,
) -> StabilityResult:
    """Solve the stability QP; infeasible grasps score an infinite metric."""
    A = np.asarray(A, dtype=float)
    problem, n_beta = _build_problem(gm, A)
    try:
        res = solve_qp(problem, tol=tol, start=start)
    except QpInfeasibleError:
        m = gm.J.shape[1]
        return StabilityResult(
            beta=np.zeros(n_beta),
            t_net=np.zeros(A.shape[1]),
            delta_tau=np.full(m, np.nan),
            metric=np.inf,
            feasible=False,
        )
    beta = res.x[:n_beta]
    t_net = res.x[n_beta:]
    delta = gm.J.T @ (gm.D @ beta) - A @ t_net
    return StabilityResult(
        beta=beta,
        t_net=t_net,
        delta_tau=delta,
        metric=float(np.linalg.norm(delta)),
        feasible=True,
        kkt=res.kkt,
    )


def torque_target(gm: GraspMatrices, beta: np.ndarray) -> np.ndarray:
    """Equilibrium joint torques J^T D beta for a solved weight vector."""
    return gm.J.T @ (gm.D @ beta)
