"""Linearized point-contact-with-friction model and per-grasp matrix assembly.

Each contact is represented by a normal-plus-tangents generator block D_k
(columns: unit normal, then e unit tangents at angles 2*pi*j/e) together with
a one-row friction block F_k = [-mu, 1, ..., 1]. Nonnegative weights beta_k
with F_k beta_k <= 0 generate exactly the inscribed (conservative) friction
pyramid, so every admissible force also lies in the exact cone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import contact_jacobian, forward_kinematics, grasp_map
from .model import DesignConfig, GraspRecord, HandModel


class ContactError(ValueError):
    pass


def _tangent_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Gram-Schmidt against the world axis least aligned with the normal;
    # deterministic so repeated runs build identical matrices.
    pick = int(np.argmin(np.abs(normal)))
    seed = np.zeros(3)
    seed[pick] = 1.0
    t1 = seed - normal * float(normal @ seed)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return t1, t2


def contact_generators(normal, mu: float, edges: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Generator block D_k (3 x (e+1)) and friction row F_k (1 x (e+1))."""
    n = np.asarray(normal, dtype=float)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise ContactError("zero contact normal")
    if abs(norm - 1.0) > 1e-9:
        raise ContactError("contact normal must be a unit vector")
    if mu <= 0:
        raise ContactError("nonpositive friction coefficient")
    if edges < 3:
        raise ContactError("need at least 3 pyramid edges")
    t1, t2 = _tangent_frame(n)
    cols = [n]
    for j in range(edges):
        ang = 2.0 * np.pi * j / edges
        cols.append(np.cos(ang) * t1 + np.sin(ang) * t2)
    D_k = np.stack(cols, axis=1)
    F_k = np.concatenate([[-mu], np.ones(edges)])[None, :]
    return D_k, F_k


@dataclass(frozen=True)
class GraspMatrices:
    """World-frame J, G and block-diagonal D, F for one desired grasp."""

    grasp_id: str
    J: np.ndarray  # (3 n_c, m)
    G: np.ndarray  # (6, 3 n_c)
    D: np.ndarray  # (3 n_c, (e+1) n_c)
    F: np.ndarray  # (n_c, (e+1) n_c)
    edges: int

    @property
    def contact_count(self) -> int:
        return self.F.shape[0]


def assemble_grasp_matrices(
    hand: HandModel, grasp: GraspRecord, config: DesignConfig
) -> GraspMatrices:
    if grasp.tag != "desired":
        raise ContactError(f"grasp {grasp.id}: only desired grasps carry contacts")
    theta = grasp.theta()
    pose = forward_kinematics(hand, theta)
    e = config.pyramid_edges
    n_c = len(grasp.contacts)
    points = np.zeros((n_c, 3))
    D = np.zeros((3 * n_c, (e + 1) * n_c))
    F = np.zeros((n_c, (e + 1) * n_c))
    for k, c in enumerate(grasp.contacts):
        points[k] = pose.point_world(c.link, c.position)
        n_world = pose.vector_world(c.link, c.normal)
        D_k, F_k = contact_generators(n_world, c.mu, e)
        D[3 * k : 3 * k + 3, (e + 1) * k : (e + 1) * (k + 1)] = D_k
        F[k, (e + 1) * k : (e + 1) * (k + 1)] = F_k
    J = contact_jacobian(hand, theta, grasp.contacts, pose)
    G = grasp_map(points)
    return GraspMatrices(grasp_id=grasp.id, J=J, G=G, D=D, F=F, edges=e)
