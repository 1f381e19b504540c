import numpy as np
import pytest

from tendonopt.designs import (
    DesignError,
    actuation_from_routes,
    actuation_matrix_case1,
    actuation_matrix_case2,
    actuation_matrix_case3,
    motor_connection,
    motor_connection_from_hand,
    travel_vector,
)
from tendonopt.kinematics import build_ujoint_geometry, tendon_excursion, ujoint_moment_arms

TABLE_CASE1 = {"r_tp": 12.0, "r_td": 4.6, "r_fr": 2.0, "r_fp": 11.8, "r_fd": 4.5}
TABLE_CASE2 = {"r_tp": 12.0, "r_td": 4.5, "r_fr": 2.0, "r_fp": 12.0, "r_fd": 4.5}
TABLE_CASE3 = {"r_tp": 4.65, "r_td": 2.0, "h_fp": 6.29, "r_fp": 12.0, "r_fd": 2.0}


def test_case1_pattern_with_published_values():
    A = actuation_matrix_case1(TABLE_CASE1).evaluate(TABLE_CASE1)
    expect = np.zeros((8, 3))
    expect[0, 0] = 12.0
    expect[1, 0] = 4.6
    expect[2, 1] = -2.0
    expect[3, 1] = 11.8
    expect[4, 1] = 4.5
    expect[5, 2] = 2.0
    expect[6, 2] = 11.8
    expect[7, 2] = 4.5
    assert (A == expect).all()


def test_case1_unit_arm_column_norms():
    ones = {k: 1.0 for k in TABLE_CASE1}
    A = actuation_matrix_case1(ones).evaluate(ones)
    assert np.linalg.norm(A, axis=0) == pytest.approx(
        [np.sqrt(2), np.sqrt(3), np.sqrt(3)]
    )


def test_case1_pattern_matches_loaded_routes(case1_hand):
    generic = actuation_from_routes(case1_hand).evaluate(TABLE_CASE1, np.zeros(8))
    direct = actuation_matrix_case1(TABLE_CASE1).evaluate(TABLE_CASE1)
    assert np.allclose(generic, direct)


def test_case2_pattern_and_roll_decoupling(case2_hand):
    A = actuation_matrix_case2(TABLE_CASE2).evaluate(TABLE_CASE2)
    assert A.shape == (8, 5)
    assert A[2, 3] == -2.0 and A[5, 4] == 2.0
    assert np.allclose(A[[2, 5], :3], 0.0)  # rolls untouched by flexion columns
    # zeroing the roll columns leaves the roll rows all-zero
    A[:, 3:] = 0.0
    assert np.allclose(A[2], 0.0) and np.allclose(A[5], 0.0)
    # mirrored fingers: columns 2 and 3 are row permutations of each other
    B = actuation_matrix_case2(TABLE_CASE2).evaluate(TABLE_CASE2)
    assert np.allclose(B[[3, 4], 1], B[[6, 7], 2])
    generic = actuation_from_routes(case2_hand).evaluate(TABLE_CASE2, np.zeros(8))
    assert np.allclose(generic, B)


def test_case3_pattern_delegates_to_ujoint_arms(case3_hand):
    joint = case3_hand.joint("fu1")

    def geometry(p):
        return build_ujoint_geometry(joint.geometry, p["r_fp"], p["h_fp"], joint)

    act = actuation_matrix_case3(TABLE_CASE3, geometry)
    theta = np.zeros(8)
    theta[2], theta[3] = 0.2, -0.1
    A = act.evaluate(TABLE_CASE3, theta)
    rho = ujoint_moment_arms(geometry(TABLE_CASE3), 0.2, -0.1)
    assert A[2, 1] == pytest.approx(rho[0, 1])
    assert A[3, 2] == pytest.approx(rho[1, 2])
    assert A[0, 0] == pytest.approx(2 * 4.65)
    assert A[1, 0] == pytest.approx(2 * 2.0)
    assert A[4, 1] == A[4, 2] == pytest.approx(2.0)
    # zero pose: front pair yaw arms equal and opposite
    A0 = act.evaluate(TABLE_CASE3, np.zeros(8))
    assert A0[3, 1] == pytest.approx(-A0[3, 2], abs=1e-12)


def test_case3_virtual_work_against_excursion(case3_hand):
    act = actuation_from_routes(case3_hand)
    rng = np.random.default_rng(8)
    theta = rng.uniform(-0.2, 0.2, 8)
    theta[[1, 4, 7]] = rng.uniform(0.1, 0.4, 3)
    A = act.evaluate(TABLE_CASE3, theta)
    h = 1e-6
    for d in range(8):
        dt = np.zeros(8)
        dt[d] = h
        fd = (tendon_excursion(case3_hand, TABLE_CASE3, theta + dt)
              - tendon_excursion(case3_hand, TABLE_CASE3, theta - dt)) / (2 * h)
        assert np.allclose(fd, A[d], atol=1e-4)


def test_motor_connection_patterns():
    M1 = motor_connection("case1", [10.0]).matrix
    assert np.allclose(M1, [[10.0], [10.0], [10.0]])
    M2 = motor_connection("case2", [10.0, 8.0]).matrix
    assert np.allclose(M2, [[10, 0], [10, 0], [10, 0], [0, 8], [0, 8]])
    M3 = motor_connection("case3", [10.0, 10.0]).matrix
    assert np.allclose(M3, [[10, 10], [10, 0], [0, 10], [10, 0], [0, 10]])
    with pytest.raises(DesignError, match="motor"):
        motor_connection("case1", [10.0, 10.0])


def test_motor_connection_from_hand_matches_patterns(case1_hand, case2_hand, case3_hand):
    assert np.allclose(motor_connection_from_hand(case1_hand).matrix,
                       motor_connection("case1", [10.0]).matrix)
    assert np.allclose(motor_connection_from_hand(case2_hand).matrix,
                       motor_connection("case2", [10.0, 10.0]).matrix)
    assert np.allclose(motor_connection_from_hand(case3_hand).matrix,
                       motor_connection("case3", [10.0, 10.0]).matrix)


def test_travel_vector_zero_pose_and_transpose_identity(case1_hand):
    assert travel_vector(case1_hand, TABLE_CASE1, np.zeros(8)) == pytest.approx([0.0] * 3)
    rng = np.random.default_rng(1)
    theta = rng.uniform(-0.3, 0.3, 8)
    A = actuation_from_routes(case1_hand).evaluate(TABLE_CASE1, theta)
    s = travel_vector(case1_hand, TABLE_CASE1, theta)
    assert np.allclose(s, A.T @ theta, atol=1e-12)


def test_case3_travel_includes_length_changes(case3_hand):
    joint = case3_hand.joint("fu1")
    geom = build_ujoint_geometry(joint.geometry, TABLE_CASE3["r_fp"],
                                 TABLE_CASE3["h_fp"], joint)
    from tendonopt.kinematics import ujoint_tendon_lengths

    theta = np.zeros(8)
    theta[2], theta[3], theta[4] = 0.25, 0.1, 0.3
    s = travel_vector(case3_hand, TABLE_CASE3, theta)
    l0 = ujoint_tendon_lengths(geom, 0.0, 0.0)
    l1 = ujoint_tendon_lengths(geom, 0.25, 0.1)
    assert s[1] == pytest.approx(0.3 * 2.0 + (l0[1] - l1[1]))
    assert s[2] == pytest.approx(0.3 * 2.0 + (l0[2] - l1[2]))


def test_column_scaling_compensated_by_tension_scaling():
    A = actuation_matrix_case1(TABLE_CASE1).evaluate(TABLE_CASE1)
    rng = np.random.default_rng(2)
    t = rng.uniform(0.1, 2.0, 3)
    alpha = rng.uniform(0.5, 2.0, 3)
    assert np.allclose((A * alpha) @ (t / alpha), A @ t, atol=1e-12)


def test_pose_dependence_flags(case1_hand, case3_hand):
    assert not actuation_from_routes(case1_hand).pose_dependent
    assert actuation_from_routes(case3_hand).pose_dependent
    # constant matrices really are constant in the pose
    act = actuation_from_routes(case1_hand)
    A0 = act.evaluate(TABLE_CASE1, np.zeros(8))
    A1 = act.evaluate(TABLE_CASE1, np.full(8, 0.3))
    assert (A0 == A1).all()


def test_missing_slot_raises():
    with pytest.raises(DesignError, match="missing"):
        actuation_matrix_case1({"r_tp": 10.0})
