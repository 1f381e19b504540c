"""Actuation matrices, motor connection matrices and travel vectors.

The three shipped design cases have hand-written matrix patterns used by the
structural tests; the route-driven builder produces the same matrices from
any hand file and is what the optimization pipeline consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .kinematics import (
    UJointGeometry,
    tendon_excursion,
    ujoint_geometry_for,
    ujoint_moment_arms,
)
from .model import HandModel


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class ActuationMatrix:
    """Maps net tendon tensions to net joint torques: tau = A(theta) t."""

    rows: int
    cols: int
    pose_dependent: bool
    evaluator: Callable[[Mapping[str, float], np.ndarray | None], np.ndarray]

    def evaluate(self, params: Mapping[str, float], theta=None) -> np.ndarray:
        A = self.evaluator(params, None if theta is None else np.asarray(theta, float))
        assert A.shape == (self.rows, self.cols)
        return A


@dataclass(frozen=True)
class MotorConnectionMatrix:
    matrix: np.ndarray  # (n_tendons, n_motors) of motor pulley radii or zeros


def _need(params: Mapping[str, float], *slots: str):
    missing = [s for s in slots if s not in params]
    if missing:
        raise DesignError(f"missing parameter slot(s): {', '.join(missing)}")


def actuation_from_routes(hand: HandModel) -> ActuationMatrix:
    """Generic route-driven actuation matrix for any hand model."""
    m, n_t = hand.dof_count, len(hand.tendons)
    pose_dependent = any(
        c.config_dependent for t in hand.tendons for c in t.crossings
    )

    def evaluator(params: Mapping[str, float], theta: np.ndarray | None) -> np.ndarray:
        A = np.zeros((m, n_t))
        geom_cache: dict[str, tuple[UJointGeometry, np.ndarray]] = {}
        for j_idx, tendon in enumerate(hand.tendons):
            for c in tendon.crossings:
                joint = hand.joint(c.joint)
                base = hand.dof_index(c.joint)
                if c.config_dependent:
                    if theta is None:
                        raise DesignError(
                            f"tendon {tendon.id}: configuration-dependent moment arms need a pose"
                        )
                    if c.joint not in geom_cache:
                        geom = ujoint_geometry_for(hand, joint, params)
                        rho = ujoint_moment_arms(geom, theta[base], theta[base + 1])
                        geom_cache[c.joint] = (geom, rho)
                    rho = geom_cache[c.joint][1]
                    A[base, j_idx] += rho[0, c.tendon_index]
                    A[base + 1, j_idx] += rho[1, c.tendon_index]
                else:
                    _need(params, c.slot)
                    A[base, j_idx] += c.sign * params[c.slot]
        return A

    return ActuationMatrix(rows=m, cols=n_t, pose_dependent=pose_dependent, evaluator=evaluator)


def actuation_matrix_case1(params: Mapping[str, float]) -> ActuationMatrix:
    """8x3 single-motor roll-pitch pattern (thumb column, two mirrored fingers)."""
    _need(params, "r_tp", "r_td", "r_fr", "r_fp", "r_fd")

    def evaluator(p: Mapping[str, float], theta=None) -> np.ndarray:
        A = np.zeros((8, 3))
        A[0, 0] = p["r_tp"]
        A[1, 0] = p["r_td"]
        A[2, 1] = -p["r_fr"]
        A[3, 1] = p["r_fp"]
        A[4, 1] = p["r_fd"]
        A[5, 2] = p["r_fr"]
        A[6, 2] = p["r_fp"]
        A[7, 2] = p["r_fd"]
        return A

    return ActuationMatrix(rows=8, cols=3, pose_dependent=False, evaluator=evaluator)


def actuation_matrix_case2(params: Mapping[str, float]) -> ActuationMatrix:
    """8x5 dual-motor pattern: flexion columns 1-3, roll columns 4-5."""
    _need(params, "r_tp", "r_td", "r_fr", "r_fp", "r_fd")

    def evaluator(p: Mapping[str, float], theta=None) -> np.ndarray:
        A = np.zeros((8, 5))
        A[0, 0] = p["r_tp"]
        A[1, 0] = p["r_td"]
        A[3, 1] = p["r_fp"]
        A[4, 1] = p["r_fd"]
        A[6, 2] = p["r_fp"]
        A[7, 2] = p["r_fd"]
        A[2, 3] = -p["r_fr"]
        A[5, 4] = p["r_fr"]
        return A

    return ActuationMatrix(rows=8, cols=5, pose_dependent=False, evaluator=evaluator)


def actuation_matrix_case3(
    params: Mapping[str, float],
    geometry: Callable[[Mapping[str, float]], UJointGeometry],
    front_indices: tuple[int, int] = (1, 2),
) -> ActuationMatrix:
    """8x5 dual-motor pitch-yaw pattern with pose-dependent proximal rows.

    Thumb rows carry doubled moment arms (two strands joined over an idler);
    finger pitch/yaw rows take the front-tendon moment arms of the universal
    joint evaluated at the given pose; distal rows are constant.
    """
    _need(params, "r_tp", "r_td", "r_fd")

    def evaluator(p: Mapping[str, float], theta: np.ndarray | None) -> np.ndarray:
        if theta is None:
            raise DesignError("pitch-yaw actuation matrix needs a pose")
        geom = geometry(p)
        A = np.zeros((8, 5))
        A[0, 0] = 2 * p["r_tp"]
        A[1, 0] = 2 * p["r_td"]
        for f, (row0, cols) in enumerate(((2, (1, 2)), (5, (3, 4)))):
            rho = ujoint_moment_arms(geom, theta[row0], theta[row0 + 1])
            for c, tendon_idx in zip(cols, front_indices):
                A[row0, c] = rho[0, tendon_idx]
                A[row0 + 1, c] = rho[1, tendon_idx]
                A[row0 + 2, c] = p["r_fd"]
        return A

    return ActuationMatrix(rows=8, cols=5, pose_dependent=True, evaluator=evaluator)


_CASE_MOTOR_PATTERNS = {
    "case1": [(0,), (0,), (0,)],
    "case2": [(0,), (0,), (0,), (1,), (1,)],
    "case3": [(0, 1), (0,), (1,), (0,), (1,)],
}

_CASE_MOTOR_COUNT = {"case1": 1, "case2": 2, "case3": 2}


def motor_connection(case: str, r_mot) -> MotorConnectionMatrix:
    """Exact motor-tendon connection pattern of the named design case."""
    if case not in _CASE_MOTOR_PATTERNS:
        raise DesignError(f"unknown design case {case!r}")
    radii = np.atleast_1d(np.asarray(r_mot, dtype=float))
    expected = _CASE_MOTOR_COUNT[case]
    if radii.shape[0] != expected:
        raise DesignError(f"{case} uses {expected} motor(s), got {radii.shape[0]} radii")
    pattern = _CASE_MOTOR_PATTERNS[case]
    M = np.zeros((len(pattern), expected))
    for row, motors in enumerate(pattern):
        for mot in motors:
            M[row, mot] = radii[mot]
    return MotorConnectionMatrix(M)


def motor_connection_from_hand(hand: HandModel) -> MotorConnectionMatrix:
    motor_index = {m.id: i for i, m in enumerate(hand.motors)}
    M = np.zeros((len(hand.tendons), len(hand.motors)))
    for row, tendon in enumerate(hand.tendons):
        for mot in tendon.motors:
            M[row, motor_index[mot]] = hand.motor(mot).pulley_radius
    return MotorConnectionMatrix(M)


def travel_vector(hand: HandModel, params: Mapping[str, float], theta) -> np.ndarray:
    """Tendon travel for a pose; route-driven, identical to A(theta)^T theta for
    constant-moment-arm designs."""
    return tendon_excursion(hand, params, theta)
