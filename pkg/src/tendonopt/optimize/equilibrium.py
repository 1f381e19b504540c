"""Quasistatic pre-contact hand equilibrium for given motor angles.

Finds joint angles and tendon tensions such that every sprung joint balances
its restoring spring against the tendon pull while each tendon's travel
matches what its motor collected. Joints that reach a mechanical limit are
clamped against the hard stop and removed from the balance system; tendons
whose tension would go negative are released as slack. Tendons slide freely
over via points, so distal joints keep moving after a proximal joint stops.

Degrees of freedom without a spring must be driven by tendons that cross
only springless joints (a rigid transmission); their angles then follow the
travel constraint directly and the transmission tension is indeterminate
(reported as zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..designs import actuation_from_routes, motor_connection_from_hand
from ..kinematics import (
    tendon_excursion,
    ujoint_geometry_for,
    ujoint_moment_arms,
    ujoint_tendon_lengths,
)
from ..model import HandModel


class EquilibriumError(RuntimeError):
    pass


@dataclass(frozen=True)
class PoseSolve:
    theta: np.ndarray
    tensions: np.ndarray  # per tendon; zero for slack and rigid-transmission tendons
    converged: bool
    clamped: tuple[int, ...]  # DoF indices resting on a limit
    slack: tuple[int, ...]  # tendon indices released
    residual: float


def sprung_dofs(hand: HandModel) -> np.ndarray:
    mask = np.zeros(hand.dof_count, dtype=bool)
    for j in hand.joints:
        if j.spring is None:
            continue
        base = hand.dof_index(j.id)
        if j.spring.kind == "torsional":
            mask[base] = True
        else:
            mask[base : base + j.dof] = True
    return mask


def spring_torques(hand: HandModel, params: Mapping[str, float], theta,
                   joint_ids=None) -> np.ndarray:
    """Restoring torque each spring asks the actuation to balance, per DoF.

    With ``joint_ids`` only those joints' springs are evaluated, so partial
    parameter vectors (one chain at a time) work.
    """
    theta = np.asarray(theta, dtype=float)
    tau = np.zeros(hand.dof_count)
    for j in hand.joints:
        if j.spring is None or (joint_ids is not None and j.id not in joint_ids):
            continue
        base = hand.dof_index(j.id)
        K = params[j.spring.stiffness_slot]
        pre = params[j.spring.preload_slot]
        if j.spring.kind == "torsional":
            # the drive sign maps mirrored joints into the convention where
            # the tendon pull is positive, so torsion is theta + preload there
            sig = j.spring.sign
            tau[base] += sig * K * (sig * theta[base] + pre)
        else:
            geom = ujoint_geometry_for(hand, j, params)
            idx = j.spring.tendon_index
            l_zero = ujoint_tendon_lengths(geom, 0.0, 0.0)[idx]
            l_now = ujoint_tendon_lengths(geom, theta[base], theta[base + 1])[idx]
            force = max(K * ((l_now - l_zero) + pre), 0.0)  # tendons cannot push
            rho = ujoint_moment_arms(geom, theta[base], theta[base + 1])[:, idx]
            tau[base : base + 2] += -rho * force
    return tau


def tendon_classes(hand: HandModel) -> tuple[list[int], list[int]]:
    """(sprung tendons, rigid transmissions); mixed routes are indeterminate."""
    mask = sprung_dofs(hand)
    sprung, rigid = [], []
    for k, t in enumerate(hand.tendons):
        crossed = []
        for c in t.crossings:
            base = hand.dof_index(c.joint)
            dof = hand.joint(c.joint).dof
            crossed += [bool(mask[base + d]) for d in range(dof)]
        if all(crossed):
            sprung.append(k)
        elif not any(crossed):
            rigid.append(k)
        else:
            raise EquilibriumError(
                f"tendon {t.id} mixes sprung and springless joints; "
                "pre-contact equilibrium is indeterminate"
            )
    return sprung, rigid


def pre_contact_pose(
    hand: HandModel,
    params: Mapping[str, float],
    theta_mot,
    theta0: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> PoseSolve:
    """Equilibrium pose and tensions for the given motor angles."""
    theta_mot = np.atleast_1d(np.asarray(theta_mot, dtype=float))
    m = hand.dof_count
    act = actuation_from_routes(hand)
    M = motor_connection_from_hand(hand).matrix
    if theta_mot.shape != (M.shape[1],):
        raise EquilibriumError(
            f"expected {M.shape[1]} motor angles, got {theta_mot.shape[0]}"
        )
    target = M @ theta_mot
    limits = hand.dof_limits()
    mask_sprung = sprung_dofs(hand)
    sprung_t, _ = tendon_classes(hand)

    theta = (hand.opening_pose() if theta0 is None else np.asarray(theta0, float)).copy()
    theta = np.clip(theta, limits[:, 0], limits[:, 1])
    clamped: dict[int, float] = {}
    slack: set[int] = set()
    tensions = np.zeros(len(hand.tendons))
    res_norm = np.inf

    for _ in range(max_iter):
        is_clamped = np.zeros(m, dtype=bool)
        for d in clamped:
            is_clamped[d] = True
        free_bal = np.where(mask_sprung & ~is_clamped)[0]  # balance equations
        free_all = np.where(~is_clamped)[0]  # unknown angles
        taut_sprung = np.array([k for k in sprung_t if k not in slack], dtype=int)
        taut_all = np.array(
            [k for k in range(len(hand.tendons)) if k not in slack], dtype=int
        )

        def pack(v):
            th = theta.copy()
            th[free_all] = v[: free_all.size]
            for d, val in clamped.items():
                th[d] = val
            t = np.zeros(len(hand.tendons))
            t[taut_sprung] = v[free_all.size :]
            return th, t

        def full_residual(v):
            th, t = pack(v)
            bal = act.evaluate(params, th) @ t - spring_torques(hand, params, th)
            trav = tendon_excursion(hand, params, th) - target
            return np.concatenate([bal[free_bal], trav[taut_all]])

        v = np.concatenate([theta[free_all], tensions[taut_sprung]])
        r = full_residual(v)
        # damped Newton with a finite-difference Jacobian; affine for
        # constant-moment-arm hands, so one step suffices there
        for _newton in range(60):
            if not np.all(np.isfinite(r)):
                return PoseSolve(theta, tensions, False, tuple(sorted(clamped)),
                                 tuple(sorted(slack)), float("inf"))
            if np.max(np.abs(r), initial=0.0) <= tol:
                break
            jac = np.empty((r.size, v.size))
            h = 1e-6
            for i in range(v.size):
                vp = v.copy()
                vp[i] += h
                jac[:, i] = (full_residual(vp) - r) / h
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
            alpha = 1.0
            r_new = r
            for _ in range(30):
                r_new = full_residual(v + alpha * step)
                if np.linalg.norm(r_new) <= (1 - 1e-4 * alpha) * np.linalg.norm(r) + 1e-15:
                    break
                alpha *= 0.5
            v = v + alpha * step
            r = r_new
        theta, tensions = pack(v)
        res_norm = float(np.max(np.abs(r), initial=0.0))

        # limit clamping: pin the worst violator and re-solve
        lo_viol = limits[:, 0] - theta
        hi_viol = theta - limits[:, 1]
        viol = np.maximum(lo_viol, hi_viol)
        viol[is_clamped] = -np.inf
        worst = int(np.argmax(viol))
        if viol[worst] > 1e-10:
            clamped[worst] = (
                limits[worst, 0] if lo_viol[worst] >= hi_viol[worst] else limits[worst, 1]
            )
            theta[worst] = clamped[worst]
            continue

        # slack release: tensions cannot be negative
        neg = [int(k) for k in np.where(tensions < -1e-10)[0] if k not in slack]
        if neg:
            k = min(neg, key=lambda i: tensions[i])
            slack.add(k)
            tensions[k] = 0.0
            continue

        # clamped joints must push against their stop, else release them
        bal_full = act.evaluate(params, theta) @ tensions - spring_torques(hand, params, theta)
        released = False
        for d, value in sorted(clamped.items()):
            if not mask_sprung[d]:
                continue
            at_lower = abs(value - limits[d, 0]) < abs(value - limits[d, 1])
            lift = bal_full[d] > tol if at_lower else bal_full[d] < -tol
            if lift:
                del clamped[d]
                released = True
                break
        if released:
            continue

        return PoseSolve(
            theta=theta,
            tensions=tensions,
            converged=res_norm <= tol,
            clamped=tuple(sorted(clamped)),
            slack=tuple(sorted(slack)),
            residual=res_norm,
        )

    return PoseSolve(
        theta=theta,
        tensions=tensions,
        converged=False,
        clamped=tuple(sorted(clamped)),
        slack=tuple(sorted(slack)),
        residual=res_norm,
    )
