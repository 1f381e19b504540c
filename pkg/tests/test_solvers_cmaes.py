import numpy as np
import pytest

from tendonopt.solvers import CmaesSettings, cmaes_minimize


def sphere_at(c):
    return lambda x: float(np.sum((x - c) ** 2))


def test_sphere_reaches_interior_optimum():
    c = np.array([1.2, -0.7, 0.3, 2.0, -1.5])
    s = CmaesSettings(x0=np.zeros(5), lower=-5 * np.ones(5), upper=5 * np.ones(5),
                      ftol=1e-14, max_evals=60000, seed=1)
    res = cmaes_minimize(sphere_at(c), s)
    assert np.linalg.norm(res.x - c) <= 1e-6
    assert res.converged


def test_discrete_catalog_quadratic_returns_nearest_catalog_value():
    catalog = np.array([2.25, 3.60, 5.94, 7.56, 19.25])
    s = CmaesSettings(x0=np.array([10.0]), lower=np.array([2.25]),
                      upper=np.array([19.25]), catalogs={0: catalog},
                      ftol=1e-12, max_evals=4000, seed=3)
    res = cmaes_minimize(lambda x: float((x[0] - 7.0) ** 2), s)
    # exhaustive oracle over the catalog
    oracle = catalog[np.argmin((catalog - 7.0) ** 2)]
    assert res.x[0] == oracle == 7.56
    assert res.fun == pytest.approx((7.56 - 7.0) ** 2)


def test_catalog_result_is_always_a_member():
    catalog = np.array([0.09, 0.12, 0.18, 0.26, 0.37])
    s = CmaesSettings(x0=np.array([0.2, 0.0]), lower=np.array([0.09, -1.0]),
                      upper=np.array([0.37, 1.0]), catalogs={0: catalog},
                      ftol=1e-12, max_evals=4000, seed=5)
    res = cmaes_minimize(lambda x: float((x[0] - 0.2) ** 2 + x[1] ** 2), s)
    assert res.x[0] in catalog
    assert res.x[0] == pytest.approx(0.18)
    assert abs(res.x[1]) <= 1e-5


def test_same_seed_bitwise_identical():
    s = lambda: CmaesSettings(x0=np.zeros(4), lower=-3 * np.ones(4),
                              upper=3 * np.ones(4), ftol=1e-11,
                              max_evals=20000, seed=42)
    f = sphere_at(np.array([0.5, -0.25, 1.0, 2.5]))
    r1 = cmaes_minimize(f, s())
    r2 = cmaes_minimize(f, s())
    assert r1.fun == r2.fun
    assert (r1.x == r2.x).all()
    assert r1.evals == r2.evals


def test_best_objective_monotone_across_reruns_with_budget():
    # best-so-far returned never worsens when the budget grows
    f = sphere_at(np.array([1.0, 1.0, 1.0]))
    vals = []
    for budget in (60, 240, 2000):
        s = CmaesSettings(x0=np.zeros(3), lower=-4 * np.ones(3),
                          upper=4 * np.ones(3), ftol=1e-15,
                          max_evals=budget, seed=9)
        vals.append(cmaes_minimize(f, s).fun)
    assert vals[0] >= vals[1] >= vals[2]


def test_degenerate_box_returns_the_point_without_search():
    lo = np.array([2.0, 3.0])
    s = CmaesSettings(x0=lo, lower=lo, upper=lo, ftol=1e-9, max_evals=100, seed=0)
    calls = []

    def f(x):
        calls.append(x.copy())
        return float(np.sum(x**2))

    res = cmaes_minimize(f, s)
    assert len(calls) == 1
    assert res.x == pytest.approx([2.0, 3.0])
    assert res.fun == pytest.approx(13.0)


def test_out_of_box_start_rejected():
    with pytest.raises(ValueError):
        CmaesSettings(x0=np.array([5.0]), lower=np.array([0.0]), upper=np.array([1.0]))


def test_budget_exhaustion_returns_best_so_far_with_flag():
    s = CmaesSettings(x0=np.zeros(5), lower=-5 * np.ones(5), upper=5 * np.ones(5),
                      ftol=1e-16, max_evals=64, seed=2)
    res = cmaes_minimize(sphere_at(np.ones(5)), s)
    assert not res.converged
    assert res.evals >= 64
    assert np.isfinite(res.fun)
