"""Torque / posture manifold sampling and affine PCA fits per kinematic chain.

Torque samples are images A(theta_ref) t of nonnegative tensions on the unit
simplex, normalized so the full joint-torque vector sums to one; that makes
them directly comparable to the unit-sum-normalized equilibrium targets of
the stability QP (the red points). Posture samples come from sweeping the
motors from the opening pose to full close through the pre-contact
equilibrium solve. The PCA fit is the affine least-squares subspace of the
considered grasp points with dimension equal to the number of motors driving
the chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np

from ..designs import actuation_from_routes, motor_connection_from_hand
from ..kinematics import tendon_excursion
from ..model import DesignConfig, GraspRecord, HandModel
from ..solvers import solve_least_squares
from .equilibrium import pre_contact_pose
from .results import DesignReport
from .stability import grasp_stability_qp, stability_start, torque_target
from .stages import GraspContext, grasp_contexts


@dataclass(frozen=True)
class GraspPoint:
    grasp_id: str
    coords: np.ndarray
    excluded: bool


@dataclass(frozen=True)
class ManifoldSamples:
    space: str  # "torque" | "posture"
    chain: str
    dof_labels: tuple[str, ...]
    points: np.ndarray  # (n_samples, dim)
    grasp_points: tuple[GraspPoint, ...]
    pca_origin: np.ndarray
    pca_axes: np.ndarray  # (k, dim), k = motors on the chain

    @property
    def dim(self) -> int:
        return len(self.dof_labels)


def chain_motor_count(hand: HandModel, chain: str) -> int:
    motors: set[str] = set()
    for k in hand.chain_tendons(chain):
        motors.update(hand.tendons[k].motors)
    return len(motors)


def _chain_slots(hand: HandModel, chain: str) -> frozenset[str]:
    slots: set[str] = set()
    joint_ids = {j.id for j in hand.joints if j.chain == chain}
    for t in hand.tendons:
        for c in t.crossings:
            if c.joint in joint_ids and c.slot is not None:
                slots.add(c.slot)
    for j in hand.joints:
        if j.chain != chain:
            continue
        if j.spring is not None:
            slots.update({j.spring.stiffness_slot, j.spring.preload_slot})
        if j.geometry is not None:
            slots.update({j.geometry.radius_slot, j.geometry.height_slot})
    return frozenset(slots)


def chain_groups(hand: HandModel) -> list[tuple[str, str]]:
    """(display name, representative chain) pairs; mirrored chains collapse.

    Chains referencing exactly the same parameter slots are mirrored copies
    of each other and plot identically, so only one representative sub-chain
    is exported, named by the common stem (e.g. finger1 + finger2 -> finger).
    """
    groups: dict[frozenset[str], list[str]] = {}
    for chain in hand.chains:
        groups.setdefault(_chain_slots(hand, chain.name), []).append(chain.name)
    out = []
    for members in groups.values():
        members.sort()
        rep = members[0]
        name = rep if len(members) == 1 else (rep.rstrip("0123456789") or rep)
        out.append((name, rep))
    return sorted(out)


def simplex_grid(parts: int, budget: int) -> np.ndarray:
    """Nonnegative unit-sum grid with at most ``budget`` points (incl. vertices)."""
    if parts == 1:
        return np.ones((1, 1))
    resolution = 1
    while comb(resolution + parts, parts - 1) <= budget and resolution < 4000:
        resolution += 1
    rows = []
    for cut in combinations(range(resolution + parts - 1), parts - 1):
        prev = -1
        counts = []
        for c in cut:
            counts.append(c - prev - 1)
            prev = c
        counts.append(resolution + parts - 2 - prev)
        rows.append(counts)
    return np.asarray(rows, dtype=float) / resolution


def pca_fit(points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Affine least-squares subspace: (origin, axes rows), highest variance first."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    origin = pts.mean(axis=0)
    k = max(0, min(k, pts.shape[1], max(pts.shape[0] - 1, 0)))
    if k == 0:
        return origin, np.zeros((0, pts.shape[1]))
    _, _, vt = np.linalg.svd(pts - origin, full_matrices=False)
    return origin, vt[:k]


def _travel_upper(hand: HandModel, params) -> np.ndarray:
    """Largest travel each tendon can collect over the joint-limit box.

    This is the motor-side end point of the posture sweep: it respects each
    crossing's sign, so joints the tendon drives toward their lower limit
    (mirrored rolls) contribute their closing stop, not their upper limit.
    """
    from ..kinematics import ujoint_geometry_for, ujoint_tendon_lengths

    limits = hand.dof_limits()
    s_hi = np.zeros(len(hand.tendons))
    for t_idx, tendon in enumerate(hand.tendons):
        total = 0.0
        for c in tendon.crossings:
            joint = hand.joint(c.joint)
            base = hand.dof_index(c.joint)
            if c.config_dependent:
                geom = ujoint_geometry_for(hand, joint, params)
                l_zero = ujoint_tendon_lengths(geom, 0.0, 0.0)[c.tendon_index]
                corners = [
                    l_zero - ujoint_tendon_lengths(geom, p, y)[c.tendon_index]
                    for p in np.linspace(limits[base, 0], limits[base, 1], 5)
                    for y in np.linspace(limits[base + 1, 0], limits[base + 1, 1], 5)
                ]
                total += max(corners)
            else:
                r = c.sign * params[c.slot]
                total += max(r * limits[base, 0], r * limits[base, 1])
        s_hi[t_idx] = total
    return s_hi


def _stage_excluded(report: DesignReport, stage: int) -> set[str]:
    for s in report.stages:
        if s.stage == stage:
            return set(s.excluded)
    return set()


def sample_manifolds(
    hand: HandModel,
    grasps: Sequence[GraspRecord],
    config: DesignConfig,
    report: DesignReport,
    posture_grid: int | None = None,
    contexts: Mapping[str, GraspContext] | None = None,
) -> list[ManifoldSamples]:
    """Manifold samples, grasp points and PCA fits for every chain and space."""
    params = report.params
    act = actuation_from_routes(hand)
    M = motor_connection_from_hand(hand).matrix
    n_motors = M.shape[1]
    desired = [g for g in grasps if g.tag == "desired"]
    if contexts is None:
        contexts = grasp_contexts(hand, grasps, config)
    grid = config.posture_grid if posture_grid is None else posture_grid
    labels = hand.dof_labels()

    # equilibrium torque targets closest to the manifold, one per grasp
    targets: dict[str, np.ndarray] = {}
    for g in desired:
        ctx = contexts[g.id]
        if ctx.start is None:
            continue  # no feasible equilibrium: no torque point to draw
        A = act.evaluate(params, g.theta())
        res = grasp_stability_qp(ctx.gm, A, tol=config.qp_tolerance, start=ctx.start)
        if res.feasible:
            targets[g.id] = torque_target(ctx.gm, res.beta)

    # posture sweep shared by all chains
    zero_ref = np.zeros(hand.dof_count)
    open_fit = solve_least_squares(M, tendon_excursion(hand, params, hand.opening_pose()))
    close_fit = solve_least_squares(M, _travel_upper(hand, params))
    axes = [
        np.linspace(open_fit.x[i], close_fit.x[i], grid) for i in range(n_motors)
    ]
    sweep_poses: list[np.ndarray] = []
    theta_prev: np.ndarray | None = None
    if n_motors == 1:
        combos = [(v,) for v in axes[0]]
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        combos = list(zip(*(ax.ravel() for ax in mesh)))
    for mot in combos:
        solve = pre_contact_pose(hand, params, np.asarray(mot), theta0=theta_prev)
        sweep_poses.append(solve.theta)
        theta_prev = solve.theta
    sweep = np.asarray(sweep_poses)

    torque_excluded = _stage_excluded(report, 1)
    posture_excluded = _stage_excluded(report, 2) | _stage_excluded(report, 3)

    out: list[ManifoldSamples] = []
    for display_name, rep_chain in chain_groups(hand):
        dofs = hand.chain_dofs(rep_chain)
        chain_labels = tuple(labels[d] for d in dofs)
        k = chain_motor_count(hand, rep_chain)

        # torque space
        A0 = act.evaluate(params, zero_ref)
        tens = simplex_grid(A0.shape[1], config.torque_grid_points)
        taus = tens @ A0.T
        sums = taus.sum(axis=1)
        keep = sums > 1e-9
        torque_points = (taus[keep] / sums[keep, None])[:, dofs]
        torque_grasps = tuple(
            GraspPoint(g.id, targets[g.id][dofs], g.id in torque_excluded)
            for g in desired
            if g.id in targets
        )
        considered = [p.coords for p in torque_grasps if not p.excluded]
        origin, axes_rows = pca_fit(np.asarray(considered) if considered else np.zeros((1, len(dofs))), k)
        out.append(
            ManifoldSamples(
                space="torque",
                chain=display_name,
                dof_labels=chain_labels,
                points=torque_points,
                grasp_points=torque_grasps,
                pca_origin=origin,
                pca_axes=axes_rows,
            )
        )

        # posture space
        posture_points = sweep[:, dofs]
        posture_grasps = tuple(
            GraspPoint(g.id, g.theta()[dofs], g.id in posture_excluded) for g in desired
        )
        considered = [p.coords for p in posture_grasps if not p.excluded]
        origin, axes_rows = pca_fit(np.asarray(considered) if considered else np.zeros((1, len(dofs))), k)
        out.append(
            ManifoldSamples(
                space="posture",
                chain=display_name,
                dof_labels=chain_labels,
                points=posture_points,
                grasp_points=posture_grasps,
                pca_origin=origin,
                pca_axes=axes_rows,
            )
        )
    return out
