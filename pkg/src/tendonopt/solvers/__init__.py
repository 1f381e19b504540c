"""Self-contained numerical engines: QP, NNLS, least squares, CMA-ES."""

from .cmaes import CmaesResult, CmaesSettings, cmaes_minimize, decode_catalogs
from .linear import LsqResult, nullspace, solve_least_squares
from .nnls import nnls_kkt_residuals, solve_nnls
from .qp import (
    QpError,
    QpInfeasibleError,
    QpProblem,
    QpResult,
    find_feasible_point,
    kkt_residuals,
    solve_qp,
)

__all__ = [
    "CmaesResult",
    "CmaesSettings",
    "cmaes_minimize",
    "decode_catalogs",
    "LsqResult",
    "nullspace",
    "solve_least_squares",
    "nnls_kkt_residuals",
    "solve_nnls",
    "QpError",
    "QpInfeasibleError",
    "QpProblem",
    "QpResult",
    "find_feasible_point",
    "kkt_residuals",
    "solve_qp",
]
