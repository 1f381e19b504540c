import numpy as np
import pytest

from tendonopt.model import (
    ArmSlot,
    ChainSpec,
    Crossing,
    HandModel,
    JointSpec,
    LinkSpec,
    MotorSpec,
    ParamLayout,
    PreloadSlot,
    SpringSpec,
    StiffnessSlot,
    TendonRoute,
)
from tendonopt.optimize import pre_contact_pose, spring_torques
from tendonopt.optimize.equilibrium import EquilibriumError, tendon_classes


def two_joint_chain(limits2=(0.0, np.pi / 2)):
    catalog = (2.25, 5.0, 10.0)
    return HandModel(
        name="duo",
        design_case="generic",
        links=(LinkSpec("palm", None), LinkSpec("prox", "j1"), LinkSpec("dist", "j2")),
        joints=(
            JointSpec("j1", "revolute", "palm", "prox", (0, 0, 0), (0, 0, 0),
                      ((0.0, 1.0, 0.0),), ((-np.pi / 4, np.pi / 2),), "only",
                      spring=SpringSpec("torsional", "K1", "th1")),
            JointSpec("j2", "revolute", "prox", "dist", (0, 0, 50.0), (0, 0, 0),
                      ((0.0, 1.0, 0.0),), (limits2,), "only",
                      spring=SpringSpec("torsional", "K2", "th2")),
        ),
        tendons=(TendonRoute("t", ("m",), (Crossing("j1", slot="r1"),
                                           Crossing("j2", slot="r2")), "dist"),),
        motors=(MotorSpec("m", 10.0),),
        layout=ParamLayout(
            (ArmSlot("r1", 2.0, 12.0), ArmSlot("r2", 2.0, 12.0)),
            (StiffnessSlot("K1", catalog), StiffnessSlot("K2", catalog)),
            (PreloadSlot("th1", 0.0, 4.0), PreloadSlot("th2", 0.0, 4.0)),
        ),
        chains=(ChainSpec("only", "finger"),),
    )


PARAMS = {"r1": 10.0, "r2": 5.0, "K1": 10.0, "K2": 5.0, "th1": 1.0, "th2": 1.0}


def test_closed_form_zero_motor_angle():
    hand = two_joint_chain()
    sol = pre_contact_pose(hand, PARAMS, [0.0])
    assert sol.converged
    assert sol.theta == pytest.approx([0.0, 0.0], abs=1e-9)
    assert sol.tensions == pytest.approx([1.0], abs=1e-9)


def test_closed_form_matches_linear_solution():
    # balance th_j = r_j t / K_j - th0_j with travel 10 th_mot = 10 th1 + 5 th2
    # gives t = 1 + (2/3) th_mot and th1 = th2 = t - 1
    hand = two_joint_chain()
    for mot in (0.15, 0.3, 0.45):
        sol = pre_contact_pose(hand, PARAMS, [mot])
        t = 1.0 + (2.0 / 3.0) * mot
        assert sol.converged
        assert sol.tensions == pytest.approx([t], abs=1e-9)
        assert sol.theta == pytest.approx([t - 1.0, t - 1.0], abs=1e-9)


def test_distal_limit_clamping_keeps_proximal_moving():
    hand = two_joint_chain(limits2=(0.0, 0.2))
    # past the clamp the distal stays at 0.2 while the proximal keeps closing
    sweep = np.linspace(0.0, 1.2, 13)
    prox, dist = [], []
    for mot in sweep:
        sol = pre_contact_pose(hand, PARAMS, [mot])
        assert sol.converged
        prox.append(sol.theta[0])
        dist.append(sol.theta[1])
    dist = np.array(dist)
    prox = np.array(prox)
    assert dist.max() == pytest.approx(0.2, abs=1e-9)
    clamped = dist >= 0.2 - 1e-9
    assert clamped.any() and not clamped.all()
    # distal monotone until the stop, proximal monotone throughout
    assert np.all(np.diff(prox) > 0)
    assert np.all(np.diff(dist) >= -1e-9)
    # after the clamp the proximal balance still holds exactly
    sol = pre_contact_pose(hand, PARAMS, [1.2])
    assert sol.clamped == (1,)
    t = sol.tensions[0]
    assert 10.0 * t == pytest.approx(10.0 * (sol.theta[0] + 1.0), abs=1e-8)
    assert 10.0 * sol.theta[0] + 5.0 * 0.2 == pytest.approx(12.0, abs=1e-8)


def test_slack_tendon_released_below_opening():
    hand = two_joint_chain()
    sol = pre_contact_pose(hand, PARAMS, [-3.0])
    # motor paid out far more than the springs can follow: joints rest on
    # their opening stops and the tendon goes slack
    assert sol.slack == (0,)
    assert sol.tensions == pytest.approx([0.0])
    assert sol.theta == pytest.approx([-np.pi / 4, 0.0], abs=1e-9)


def test_spring_torques_sign_convention(case1_hand):
    params = {"K_tp": 5.94, "th0_tp": 1.0, "K_td": 2.25, "th0_td": 1.0,
              "K_fr": 3.6, "th0_fr": 1.5, "K_fp": 7.56, "th0_fp": 1.2,
              "K_fd": 2.25, "th0_fd": 0.8}
    theta = np.zeros(8)
    tau = spring_torques(case1_hand, params, theta)
    # drive-positive joints ask for positive torque at zero pose
    assert tau[case1_hand.dof_index("tp")] == pytest.approx(5.94)
    # the mirrored roll (sign -1) asks for negative torque, matching its
    # tendon's negative moment arm
    assert tau[case1_hand.dof_index("fr1")] == pytest.approx(-3.6 * 1.5)
    assert tau[case1_hand.dof_index("fr2")] == pytest.approx(3.6 * 1.5)


def test_table_values_spring_torque_example():
    # stiffness 2.25 at 0.5 rad against a 3.93 rad preload
    hand = two_joint_chain()
    params = dict(PARAMS, K1=2.25, th1=3.93)
    tau = spring_torques(hand, params, np.array([0.5, 0.0]))
    assert tau[0] == pytest.approx(9.9675)


def test_mixed_sprung_and_springless_tendon_rejected():
    hand = two_joint_chain()
    joints = list(hand.joints)
    joints[1] = JointSpec("j2", "revolute", "prox", "dist", (0, 0, 50.0), (0, 0, 0),
                          ((0.0, 1.0, 0.0),), ((0.0, np.pi / 2),), "only", spring=None)
    from dataclasses import replace

    broken = replace(hand, joints=tuple(joints))
    with pytest.raises(EquilibriumError, match="mixes"):
        tendon_classes(broken)


def test_case2_roll_transmission_is_rigid(case2_hand):
    sprung, rigid = tendon_classes(case2_hand)
    ids = [case2_hand.tendons[k].id for k in rigid]
    assert ids == ["t_roll1", "t_roll2"]
    params = {"r_tp": 12.0, "r_td": 4.5, "r_fr": 2.0, "r_fp": 12.0, "r_fd": 4.5,
              "K_tp": 5.94, "th0_tp": 1.3, "K_td": 2.25, "th0_td": 1.0,
              "K_fp": 5.94, "th0_fp": 1.3, "K_fd": 2.25, "th0_fd": 1.0}
    sol = pre_contact_pose(case2_hand, params, [0.3, 0.1])
    assert sol.converged
    # rolls follow motor 2 exactly: -r_fr th_fr1 = r_mot phi2 = r_fr th_fr2
    assert -2.0 * sol.theta[2] == pytest.approx(10.0 * 0.1, abs=1e-8)
    assert 2.0 * sol.theta[5] == pytest.approx(10.0 * 0.1, abs=1e-8)
    assert sol.tensions[3] == sol.tensions[4] == 0.0
    # an unreachable roll command clamps the rolls and is flagged
    far = pre_contact_pose(case2_hand, params, [0.3, 0.5])
    assert not far.converged and 2 in far.clamped and 5 in far.clamped
