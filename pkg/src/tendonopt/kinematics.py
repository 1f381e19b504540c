"""Forward kinematics, contact Jacobian, grasp map and tendon excursion.

Everything here is a pure function of immutable inputs. World frame = palm
frame. Universal joints rotate pitch about the joint-frame x axis first,
then yaw about the rotated y axis; this convention is fixed and tested.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import ContactRecord, HandModel, JointSpec, UJointGeometrySpec


class KinematicsError(ValueError):
    pass


def rot_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def rpy_matrix(rpy) -> np.ndarray:
    r, p, y = rpy
    return rot_axis((0, 0, 1), y) @ rot_axis((0, 1, 0), p) @ rot_axis((1, 0, 0), r)


def _homog(R: np.ndarray, t) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T


def joint_rotation(joint: JointSpec, angles: Sequence[float]) -> np.ndarray:
    """Rotation of the joint's child frame relative to its base frame."""
    if joint.kind == "revolute":
        return rot_axis(joint.axes[0], angles[0])
    pitch, yaw = angles
    Rp = rot_axis(joint.axes[0], pitch)
    yaw_axis = Rp @ np.asarray(joint.axes[1], dtype=float)
    return rot_axis(yaw_axis, yaw) @ Rp


@dataclass(frozen=True)
class Pose:
    """Per-link rigid transforms (4x4, palm frame)."""

    transforms: Mapping[str, np.ndarray]

    def transform(self, link: str) -> np.ndarray:
        return self.transforms[link]

    def point_world(self, link: str, point) -> np.ndarray:
        T = self.transforms[link]
        return T[:3, :3] @ np.asarray(point, dtype=float) + T[:3, 3]

    def vector_world(self, link: str, vec) -> np.ndarray:
        return self.transforms[link][:3, :3] @ np.asarray(vec, dtype=float)


def forward_kinematics(hand: HandModel, theta) -> Pose:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (hand.dof_count,):
        raise KinematicsError(
            f"expected {hand.dof_count} joint angles, got shape {theta.shape}"
        )
    transforms: dict[str, np.ndarray] = {hand.root_link: np.eye(4)}
    remaining = [j for j in hand.joints]
    while remaining:
        progressed = False
        for j in list(remaining):
            if j.parent_link not in transforms:
                continue
            base = transforms[j.parent_link] @ _homog(
                rpy_matrix(j.origin_rpy), j.origin_xyz
            )
            k = hand.dof_index(j.id)
            R = joint_rotation(j, theta[k : k + j.dof])
            transforms[j.child_link] = base @ _homog(R, (0.0, 0.0, 0.0))
            remaining.remove(j)
            progressed = True
        if not progressed:
            raise KinematicsError("kinematic graph is not connected to the palm")
    return Pose(transforms)


def joint_world_axes(hand: HandModel, theta, pose: Pose | None = None):
    """World-frame origin and per-DoF rotation axes for every joint.

    Returns ``{joint_id: (origin, [axis per DoF])}``. For universal joints the
    yaw axis is the pitch-rotated y axis, matching the rotation convention.
    """
    theta = np.asarray(theta, dtype=float)
    if pose is None:
        pose = forward_kinematics(hand, theta)
    out = {}
    for j in hand.joints:
        Tparent = pose.transform(j.parent_link)
        Tbase = Tparent @ _homog(rpy_matrix(j.origin_rpy), j.origin_xyz)
        Rb = Tbase[:3, :3]
        origin = Tbase[:3, 3]
        if j.kind == "revolute":
            axes = [Rb @ np.asarray(j.axes[0], dtype=float)]
        else:
            k = hand.dof_index(j.id)
            pitch_axis = Rb @ np.asarray(j.axes[0], dtype=float)
            Rp = rot_axis(j.axes[0], theta[k])
            yaw_axis = Rb @ (Rp @ np.asarray(j.axes[1], dtype=float))
            axes = [pitch_axis, yaw_axis]
        out[j.id] = (origin, axes)
    return out


def _joint_path(hand: HandModel, link: str) -> list[str]:
    """Joint ids from the palm out to ``link`` (empty for the palm itself)."""
    path = []
    cur = link
    while True:
        parent_joint = hand.link(cur).parent_joint
        if parent_joint is None:
            return list(reversed(path))
        path.append(parent_joint)
        cur = hand.joint(parent_joint).parent_link


def contact_jacobian(
    hand: HandModel,
    theta,
    contacts: Sequence[ContactRecord],
    pose: Pose | None = None,
) -> np.ndarray:
    """Contact Jacobian (3 n_c x m): joint rates to contact-point velocities.

    Its transpose maps contact forces to joint torques. A contact on the palm
    has no joint path and yields an all-zero row block.
    """
    theta = np.asarray(theta, dtype=float)
    if pose is None:
        pose = forward_kinematics(hand, theta)
    frames = joint_world_axes(hand, theta, pose)
    m = hand.dof_count
    J = np.zeros((3 * len(contacts), m))
    for k, c in enumerate(contacts):
        p = pose.point_world(c.link, c.position)
        path = _joint_path(hand, c.link)
        if not path:
            warnings.warn(
                f"contact on {c.link!r} has no joint path; its Jacobian rows are zero",
                stacklevel=2,
            )
        for joint_id in path:
            origin, axes = frames[joint_id]
            base = hand.dof_index(joint_id)
            for d, axis in enumerate(axes):
                J[3 * k : 3 * k + 3, base + d] = np.cross(axis, p - origin)
    return J


def grasp_map(points_world, reference=None) -> np.ndarray:
    """Grasp map (6 x 3 n_c): stacked contact forces to net object wrench.

    Torque rows are taken about ``reference`` (mean contact position when not
    given); equilibrium G c = 0 is invariant to that choice.
    """
    pts = np.atleast_2d(np.asarray(points_world, dtype=float))
    if pts.size == 0:
        raise KinematicsError("grasp map needs at least one contact")
    if reference is None:
        reference = pts.mean(axis=0)
    n = pts.shape[0]
    G = np.zeros((6, 3 * n))
    for k in range(n):
        r = pts[k] - reference
        G[:3, 3 * k : 3 * k + 3] = np.eye(3)
        G[3:, 3 * k : 3 * k + 3] = np.array(
            [[0, -r[2], r[1]], [r[2], 0, -r[0]], [-r[1], r[0], 0]]
        )
    return G


# ---------------------------------------------------------------------------
# universal-joint tendon model


@dataclass(frozen=True)
class UJointGeometry:
    """Concrete attachment points of a universal joint's tendon platform.

    ``lower[i]`` is expressed in the fixed base frame, ``upper[i]`` in the
    moving platform frame; both frames share the joint origin.
    """

    lower: np.ndarray  # (n_t, 3) mm
    upper: np.ndarray  # (n_t, 3) mm
    pitch_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    yaw_axis: tuple[float, float, float] = (0.0, 1.0, 0.0)
    back_index: int = 0

    def __post_init__(self):
        lower = np.atleast_2d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_2d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.shape[1] != 3:
            raise KinematicsError("attachment point arrays must be (n, 3) and congruent")
        if lower.shape[0] < 3:
            raise KinematicsError("need at least 3 attachment points")
        # collinear attachments cannot span both DoFs
        spread = lower - lower.mean(axis=0)
        if np.linalg.matrix_rank(spread, tol=1e-9) < 2:
            raise KinematicsError("attachment points are collinear")

    @property
    def tendon_count(self) -> int:
        return self.lower.shape[0]


def build_ujoint_geometry(
    spec: UJointGeometrySpec, radius: float, height: float, joint: JointSpec
) -> UJointGeometry:
    """Attachment circles of the parametric geometry at concrete dimensions."""
    angles = np.radians(np.asarray(spec.angles_deg, dtype=float))
    ring = np.stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.zeros_like(angles)],
        axis=1,
    )
    lower = ring + np.array([0.0, 0.0, -height / 2.0])
    upper = ring + np.array([0.0, 0.0, +height / 2.0])
    return UJointGeometry(
        lower=lower,
        upper=upper,
        pitch_axis=joint.axes[0],
        yaw_axis=joint.axes[1],
        back_index=spec.back_index,
    )


def _ujoint_rotation(geom: UJointGeometry, pitch: float, yaw: float) -> np.ndarray:
    Rp = rot_axis(geom.pitch_axis, pitch)
    yaw_axis = Rp @ np.asarray(geom.yaw_axis, dtype=float)
    return rot_axis(yaw_axis, yaw) @ Rp


def ujoint_tendon_lengths(geom: UJointGeometry, pitch: float, yaw: float) -> np.ndarray:
    """Straight-line tendon lengths between paired attachment points."""
    R = _ujoint_rotation(geom, pitch, yaw)
    sep = geom.lower - geom.upper @ R.T
    return np.linalg.norm(sep, axis=1)


def ujoint_moment_arms(geom: UJointGeometry, pitch: float, yaw: float) -> np.ndarray:
    """Signed tendon moment arms about (pitch, yaw); shape (2, n_t).

    Entry (d, j) equals the negative partial of tendon length j with respect
    to DoF d, so a positive value means pulling the tendon flexes that DoF.
    """
    R = _ujoint_rotation(geom, pitch, yaw)
    upper_w = geom.upper @ R.T
    sep = geom.lower - upper_w
    lengths = np.linalg.norm(sep, axis=1)
    if np.any(lengths < 1e-9):
        raise KinematicsError("degenerate tendon: attachment points coincide")
    unit = sep / lengths[:, None]
    Rp = rot_axis(geom.pitch_axis, pitch)
    pitch_axis = np.asarray(geom.pitch_axis, dtype=float)
    yaw_axis = Rp @ np.asarray(geom.yaw_axis, dtype=float)
    moments = np.cross(geom.lower, unit)  # force line passes through the lower point
    return np.stack([moments @ pitch_axis, moments @ yaw_axis])


def ujoint_geometry_for(hand: HandModel, joint: JointSpec, params: Mapping[str, float]) -> UJointGeometry:
    spec = joint.geometry
    if spec is None:
        raise KinematicsError(f"joint {joint.id} has no tendon geometry")
    return build_ujoint_geometry(spec, params[spec.radius_slot], params[spec.height_slot], joint)


# ---------------------------------------------------------------------------
# tendon excursion


def tendon_excursion(hand: HandModel, params: Mapping[str, float], theta) -> np.ndarray:
    """Tendon travel vector s (mm per tendon) relative to the zero pose.

    Constant-moment-arm crossings contribute sign * r * angle; crossings over
    a universal joint contribute the tendon shortening between the zero and
    the given configuration. Positive travel is tendon collected at the motor.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (hand.dof_count,):
        raise KinematicsError(
            f"expected {hand.dof_count} joint angles, got shape {theta.shape}"
        )
    s = np.zeros(len(hand.tendons))
    geom_cache: dict[str, UJointGeometry] = {}
    for t_idx, tendon in enumerate(hand.tendons):
        total = 0.0
        for c in tendon.crossings:
            joint = hand.joint(c.joint)
            base = hand.dof_index(c.joint)
            if c.config_dependent:
                if c.joint not in geom_cache:
                    geom_cache[c.joint] = ujoint_geometry_for(hand, joint, params)
                geom = geom_cache[c.joint]
                l_zero = ujoint_tendon_lengths(geom, 0.0, 0.0)[c.tendon_index]
                l_now = ujoint_tendon_lengths(geom, theta[base], theta[base + 1])[
                    c.tendon_index
                ]
                total += l_zero - l_now
            else:
                total += c.sign * params[c.slot] * theta[base]
        s[t_idx] = total
    return s
