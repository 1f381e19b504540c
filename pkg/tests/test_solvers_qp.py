import numpy as np
import pytest

from tendonopt.solvers import (
    QpError,
    QpInfeasibleError,
    QpProblem,
    kkt_residuals,
    solve_qp,
)


def project_simplex(v):
    """Euclidean projection onto the probability simplex (sort algorithm)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def projected_gradient(H, g, project, x0, iters=60000, tol=1e-14):
    """Long-run fixed-step projected gradient; the reference oracle."""
    L = float(np.max(np.linalg.eigvalsh(H)))
    x = project(np.asarray(x0, float))
    f_prev = np.inf
    for k in range(iters):
        x = project(x - (1.0 / L) * (H @ x + g))
        if k % 50 == 0:
            f = 0.5 * x @ (H @ x) + g @ x
            if abs(f_prev - f) < tol * max(1.0, abs(f)):
                break
            f_prev = f
    return x, 0.5 * x @ (H @ x) + g @ x


def random_psd(rng, n, spread=(0.5, 5.0)):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(*spread, n)
    return Q @ np.diag(eig) @ Q.T


def test_symmetric_simplex_example():
    p = QpProblem(H=2 * np.eye(4), g=np.zeros(4), A_eq=np.ones((1, 4)),
                  b_eq=[1.0], lb=np.zeros(4))
    res = solve_qp(p, tol=1e-10)
    assert res.x == pytest.approx([0.25] * 4, abs=1e-10)
    assert res.objective == pytest.approx(0.25)


def test_active_bound_example():
    p = QpProblem(H=[[2.0]], g=[-4.0], A_in=[[1.0]], b_in=[1.0])
    res = solve_qp(p)
    assert res.x == pytest.approx([1.0], abs=1e-12)


def test_equality_qp_matches_projected_gradient():
    rng = np.random.default_rng(0)
    for trial in range(8):
        n = 6
        H = random_psd(rng, n)
        g = rng.standard_normal(n)
        A = rng.standard_normal((2, n))
        b = rng.standard_normal(2)
        # affine projection
        pinv = A.T @ np.linalg.inv(A @ A.T)

        def proj(x, A=A, b=b, pinv=pinv):
            return x - pinv @ (A @ x - b)

        x0 = proj(np.zeros(n))
        _, f_ref = projected_gradient(H, g, proj, x0)
        res = solve_qp(QpProblem(H=H, g=g, A_eq=A, b_eq=b), tol=1e-10)
        assert res.objective == pytest.approx(f_ref, abs=1e-8)
        assert max(res.kkt.values()) <= 1e-9


def test_box_qp_matches_projected_gradient():
    rng = np.random.default_rng(1)
    for trial in range(8):
        n = int(rng.integers(3, 12))
        H = random_psd(rng, n)
        g = rng.standard_normal(n)
        _, f_ref = projected_gradient(H, g, lambda x: np.maximum(x, 0.0), np.ones(n))
        res = solve_qp(QpProblem(H=H, g=g, lb=np.zeros(n)), tol=1e-10)
        assert res.objective == pytest.approx(f_ref, abs=1e-8)
        assert max(res.kkt.values()) <= 1e-9


def test_simplex_qp_matches_projected_gradient():
    rng = np.random.default_rng(2)
    for trial in range(8):
        n = int(rng.integers(3, 10))
        H = random_psd(rng, n)
        g = rng.standard_normal(n)
        _, f_ref = projected_gradient(H, g, project_simplex, np.full(n, 1.0 / n))
        p = QpProblem(H=H, g=g, A_eq=np.ones((1, n)), b_eq=[1.0], lb=np.zeros(n))
        res = solve_qp(p, tol=1e-10)
        assert res.objective == pytest.approx(f_ref, abs=1e-8)
        assert max(res.kkt.values()) <= 1e-9


def test_singular_hessian_with_factor():
    # least-distance of a rank-deficient image: H = F^T F with F wide
    rng = np.random.default_rng(3)
    F = rng.standard_normal((3, 7))
    p = QpProblem(H=None, g=np.zeros(7), factor=F,
                  A_eq=np.ones((1, 7)), b_eq=[1.0], lb=np.zeros(7))
    res = solve_qp(p, tol=1e-10)
    assert res.kkt["primal"] <= 1e-9
    assert res.kkt["stationarity"] <= 1e-8


def test_infeasible_constraints_raise_with_certificate():
    p = QpProblem(H=np.eye(2), g=np.zeros(2),
                  A_eq=np.array([[1.0, 1.0], [1.0, 1.0]]), b_eq=[1.0, 2.0])
    with pytest.raises(QpInfeasibleError) as err:
        solve_qp(p)
    assert err.value.residual > 1e-3


def test_inconsistent_dimensions_rejected():
    with pytest.raises(QpError):
        QpProblem(H=np.eye(2), g=np.zeros(3))


def test_constraint_violations_bounded_by_tolerance():
    rng = np.random.default_rng(4)
    for trial in range(10):
        n = int(rng.integers(4, 10))
        H = random_psd(rng, n)
        g = rng.standard_normal(n)
        A_in = rng.standard_normal((3, n))
        b_in = rng.uniform(0.5, 1.5, 3)
        p = QpProblem(H=H, g=g, A_in=A_in, b_in=b_in, lb=np.full(n, -2.0))
        res = solve_qp(p, tol=1e-10)
        assert res.kkt["primal"] <= 10 * 1e-10 + 1e-12
        assert res.kkt["stationarity"] <= 1e-8
        assert res.kkt["complementarity"] <= 1e-8
        check = kkt_residuals(p, res.x)
        assert check["primal"] <= 1e-9
