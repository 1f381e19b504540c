"""Unconstrained linear least squares with rank reporting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LsqResult:
    x: np.ndarray
    residual: np.ndarray  # M x - s
    rank_deficient: bool  # minimum-norm solution was returned


def solve_least_squares(M, s) -> LsqResult:
    """argmin ||M x - s||; minimum-norm solution (flagged) when M is rank deficient."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    s = np.asarray(s, dtype=float).ravel()
    x, _, rank, _ = np.linalg.lstsq(M, s, rcond=None)
    return LsqResult(x=x, residual=M @ x - s, rank_deficient=rank < M.shape[1])


def nullspace(A, rcond: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the nullspace of A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0 or not np.any(A):
        return np.eye(A.shape[1])
    u, s, vt = np.linalg.svd(A)
    if rcond is None:
        rcond = max(A.shape) * np.finfo(float).eps
    tol = s[0] * rcond if s.size else 0.0
    rank = int(np.sum(s > tol))
    return vt[rank:].T
