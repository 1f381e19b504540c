"""Nonnegative least squares by the classic active-set method.

Solves min ||A t - b|| subject to t >= 0. Always feasible; the returned
point satisfies the KKT conditions (A^T (A t - b))_i >= -tol on the active
set and complementarity on the passive set, up to rounding.
"""

from __future__ import annotations

import numpy as np


def solve_nnls(A, b, max_iter: int | None = None) -> tuple[np.ndarray, float]:
    """Return (t >= 0, residual norm) minimizing ||A t - b||."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    if not np.any(A):
        raise ValueError("A is all zero")
    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * n + 30

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ b
    tol = 10.0 * np.finfo(float).eps * max(m, n) * max(np.max(np.abs(w)), 1.0)

    for _ in range(max_iter):
        if passive.all() or np.max(w[~passive], initial=-np.inf) <= tol:
            break
        # bring in the most positive gradient among the active components
        candidates = np.where(~passive)[0]
        passive[candidates[np.argmax(w[candidates])]] = True
        while True:
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if np.min(z[passive], initial=np.inf) > 0:
                x = z
                break
            # step to the first bound hit along x -> z, then shrink the passive set
            mask = passive & (z <= 0) & (x > z)
            alpha = np.min(x[mask] / (x[mask] - z[mask]))
            x = x + alpha * (z - x)
            passive &= x > tol * 1e-2
            x[~passive] = 0.0
            if not passive.any():
                break
        w = A.T @ (b - A @ x)

    residual = b - A @ x
    return x, float(np.linalg.norm(residual))


def nnls_kkt_residuals(A, b, x) -> dict[str, float]:
    """Stationarity, nonnegativity and complementarity residuals at x."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    grad = A.T @ (A @ x - b)
    return {
        "stationarity": float(max(0.0, -np.min(grad, initial=0.0))),
        "nonnegativity": float(max(0.0, -np.min(x, initial=0.0))),
        "complementarity": float(np.max(np.abs(grad * x), initial=0.0)),
    }
