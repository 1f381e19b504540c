import numpy as np
import pytest

from fixture_gen import GEN2F_TRUTH
from tendonopt.model import DesignConfig
from tendonopt.optimize import pca_fit, sample_manifolds, simplex_grid
from tendonopt.optimize.results import DesignReport, StageResult


def test_simplex_grid_sums_to_one_and_respects_budget():
    for parts in (1, 2, 3, 5):
        grid = simplex_grid(parts, budget=500)
        assert grid.shape[0] <= 500
        assert grid.shape[1] == parts
        assert np.allclose(grid.sum(axis=1), 1.0)
        assert grid.min() >= 0.0
        # vertices present
        for k in range(parts):
            e = np.zeros(parts)
            e[k] = 1.0
            assert (np.abs(grid - e).sum(axis=1) < 1e-12).any()


def test_pca_exact_fit_of_a_line():
    rng = np.random.default_rng(0)
    direction = np.array([2.0, -1.0, 0.5])
    direction /= np.linalg.norm(direction)
    pts = np.outer(rng.uniform(-3, 3, 40), direction) + np.array([1.0, 2.0, 3.0])
    origin, axes = pca_fit(pts, 1)
    assert axes.shape == (1, 3)
    res = (pts - origin) - np.outer((pts - origin) @ axes[0], axes[0])
    assert np.max(np.linalg.norm(res, axis=1)) <= 1e-9


def _tiny_report(stage_objs, excluded1=(), excluded23=()):
    stages = []
    for k, obj in enumerate(stage_objs, start=1):
        excl = dict.fromkeys(excluded1 if k == 1 else excluded23, 1)
        stages.append(
            StageResult(stage=k, params={}, per_grasp={}, excluded=excl,
                        objective=0.0, evaluations=0, seed=0, converged=True)
        )
    return stages


@pytest.fixture(scope="module")
def gen2f_samples(gen2f_hand, gen2f_grasp_set):
    cfg = DesignConfig(posture_grid=30, torque_grid_points=300)
    stages = _tiny_report([0, 0, 0])
    report = DesignReport(
        hand_name="gen2f", design_case="generic", seed=0, config_hash="x",
        version="t", stages=tuple(stages), params=dict(GEN2F_TRUTH),
    )
    return sample_manifolds(gen2f_hand, gen2f_grasp_set, cfg, report)


def test_manifold_sets_cover_chains_and_spaces(gen2f_samples):
    keys = {(s.space, s.chain) for s in gen2f_samples}
    assert keys == {("torque", "cha"), ("torque", "chb"),
                    ("posture", "cha"), ("posture", "chb")}


def test_single_motor_torque_manifold_is_the_arm_ray(gen2f_samples):
    s = next(x for x in gen2f_samples if x.space == "torque" and x.chain == "cha")
    pts = s.points[np.linalg.norm(s.points, axis=1) > 1e-12]
    direction = np.array([9.0, 3.0]) / np.linalg.norm([9.0, 3.0])
    cross = pts @ np.array([-direction[1], direction[0]])
    assert np.max(np.abs(cross)) <= 1e-9


def test_zero_metric_grasp_points_lie_on_the_manifold(gen2f_samples):
    s = next(x for x in gen2f_samples if x.space == "torque" and x.chain == "cha")
    direction = np.array([9.0, 3.0]) / np.linalg.norm([9.0, 3.0])
    for gp in s.grasp_points:
        perp = gp.coords - (gp.coords @ direction) * direction
        assert np.linalg.norm(perp) <= 1e-6


def test_posture_points_are_recorded_grasp_angles(gen2f_samples, gen2f_grasp_set):
    s = next(x for x in gen2f_samples if x.space == "posture" and x.chain == "chb")
    desired = {g.id: g for g in gen2f_grasp_set if g.tag == "desired"}
    for gp in s.grasp_points:
        theta = desired[gp.grasp_id].theta()
        assert gp.coords == pytest.approx(theta[2:4].tolist())
        assert not gp.excluded


def test_posture_manifold_passes_through_grasp_poses(gen2f_samples):
    # grasp poses were generated by the same pre-contact sweep
    s = next(x for x in gen2f_samples if x.space == "posture" and x.chain == "cha")
    for gp in s.grasp_points:
        dist = np.min(np.linalg.norm(s.points - gp.coords, axis=1))
        assert dist <= 0.05  # grid resolution bound


def test_pca_dimension_equals_motor_count(gen2f_samples):
    for s in gen2f_samples:
        assert s.pca_axes.shape == (1, len(s.dof_labels))


def test_excluded_flags_follow_stage_results(gen2f_hand, gen2f_grasp_set):
    cfg = DesignConfig(posture_grid=12, torque_grid_points=100)
    stages = _tiny_report([0, 0, 0], excluded1=("g00",), excluded23=("g01",))
    report = DesignReport(
        hand_name="gen2f", design_case="generic", seed=0, config_hash="x",
        version="t", stages=tuple(stages), params=dict(GEN2F_TRUTH),
    )
    samples = sample_manifolds(gen2f_hand, gen2f_grasp_set, cfg, report)
    torque = next(s for s in samples if s.space == "torque" and s.chain == "cha")
    posture = next(s for s in samples if s.space == "posture" and s.chain == "cha")
    assert {p.grasp_id for p in torque.grasp_points if p.excluded} == {"g00"}
    assert {p.grasp_id for p in posture.grasp_points if p.excluded} == {"g01"}


def test_case2_posture_sweep_covers_the_roll_axis(case2_hand):
    # the roll transmission drives finger1 negative; the sweep must span it
    params = {"r_tp": 12.0, "r_td": 4.5, "r_fr": 2.0, "r_fp": 12.0, "r_fd": 4.5,
              "K_tp": 5.94, "th0_tp": 1.3, "K_td": 2.25, "th0_td": 1.0,
              "K_fp": 5.94, "th0_fp": 1.3, "K_fd": 2.25, "th0_fd": 1.0}
    cfg = DesignConfig(posture_grid=7, torque_grid_points=60)
    stages = _tiny_report([0, 0, 0])
    report = DesignReport(
        hand_name="case2", design_case="case2", seed=0, config_hash="x",
        version="t", stages=tuple(stages), params=params,
    )
    samples = sample_manifolds(case2_hand, _case2_grasps(case2_hand), cfg, report)
    finger = next(s for s in samples if s.space == "posture" and s.chain == "finger")
    roll = finger.points[:, 0]
    assert roll.min() <= -0.7 and roll.max() >= 0.7
    # a single considered grasp caps the affine fit below the motor count
    assert finger.pca_axes.shape[0] == 0


def _case2_grasps(hand):
    import fixture_gen
    from tendonopt.model import ContactRecord, GraspRecord, pair_opening_poses

    theta = np.zeros(8)
    theta[[1, 4, 7]] = 0.4
    g = GraspRecord(
        id="p0", obj="", tag="desired", pair="p0",
        joint_angles=tuple(theta.tolist()),
        contacts=(
            ContactRecord("th_dist", (0.0, 0.0, 25.0), (1.0, 0.0, 0.0), 0.8),
            ContactRecord("f1_dist", (0.0, 0.0, 25.0), (-1.0, 0.0, 0.0), 0.8),
            ContactRecord("f2_dist", (0.0, 0.0, 25.0), (-1.0, 0.0, 0.0), 0.8),
        ),
    )
    return pair_opening_poses([g], hand)
