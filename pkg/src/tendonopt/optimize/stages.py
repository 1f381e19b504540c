"""The three-stage dual-layer optimization pipeline.

Stage 1 searches tendon moment arms so the torque manifold supports the
grasps' equilibrium torques (inner layer: stability QP per grasp). Stage 2
re-searches the same moment arms for coordinated tendon travel under the
constraint that stage 1's minimum is preserved (soft penalty), which makes
the moment arms unique. Stage 3 fixes the moment arms and searches spring
stiffnesses (discrete catalogs) and preloads per kinematic chain so the
free-motion posture manifold passes through the grasp poses (inner layer:
nonnegative least squares on the pre-contact torque balance).

Every stage runs an outlier-exclusion loop: after the search converges,
grasps whose metric exceeds the configured threshold are dropped and the
search reruns on the remainder until no new exclusions appear. Randomness
derives from the single configured seed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..contact import GraspMatrices, assemble_grasp_matrices
from ..designs import ActuationMatrix, actuation_from_routes, motor_connection_from_hand
from ..kinematics import tendon_excursion
from ..model import DesignConfig, GraspRecord, HandModel
from ..solvers import CmaesResult, CmaesSettings, cmaes_minimize, solve_least_squares, solve_nnls
from .equilibrium import sprung_dofs, spring_torques
from .results import DesignReport, StageResult, root_sum_squares
from .stability import grasp_stability_qp, stability_start

from .. import __version__


class StageError(RuntimeError):
    pass


def stage_seed(base: int, stage: int, iteration: int, extra: int = 0) -> int:
    ss = np.random.SeedSequence([int(base), stage, iteration, extra])
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# search-space helpers


def arm_search_space(hand: HandModel):
    slots = hand.layout.searchable_arms()
    names = [s.name for s in slots]
    lower = np.array([s.lower for s in slots])
    upper = np.array([s.upper for s in slots])
    return names, lower, upper


def merged_arm_params(hand: HandModel, names: Sequence[str], x) -> dict[str, float]:
    params = {s.name: s.fixed for s in hand.layout.moment_arms if s.fixed is not None}
    params.update({n: float(v) for n, v in zip(names, x)})
    return params


# ---------------------------------------------------------------------------
# stage 1: torque manifold


@dataclass
class GraspContext:
    grasp: GraspRecord
    gm: GraspMatrices
    start: np.ndarray | None  # feasible stability-QP point; None = infeasible
    warm: np.ndarray | None = None  # last optimum; feasibility is A-independent


def grasp_contexts(hand: HandModel, grasps: Sequence[GraspRecord],
                   config: DesignConfig) -> dict[str, GraspContext]:
    out = {}
    for g in grasps:
        if g.tag != "desired":
            continue
        gm = assemble_grasp_matrices(hand, g, config)
        out[g.id] = GraspContext(g, gm, stability_start(gm, len(hand.tendons)))
    return out


def _stability_metrics(
    contexts: Mapping[str, GraspContext],
    ids: Sequence[str],
    act: ActuationMatrix,
    params: Mapping[str, float],
    qp_tol: float,
) -> dict[str, float]:
    metrics = {}
    for gid in ids:
        ctx = contexts[gid]
        A = act.evaluate(params, ctx.grasp.theta())
        start = ctx.warm if ctx.warm is not None else ctx.start
        res = grasp_stability_qp(ctx.gm, A, tol=qp_tol, start=start)
        metrics[gid] = res.metric
        if res.feasible:
            ctx.warm = np.concatenate([res.beta, res.t_net])
    return metrics


def optimize_torque_manifold(
    hand: HandModel,
    grasps: Sequence[GraspRecord],
    config: DesignConfig,
    contexts: Mapping[str, GraspContext] | None = None,
) -> StageResult:
    desired = [g for g in grasps if g.tag == "desired"]
    if not desired:
        raise StageError("no desired grasps")
    if contexts is None:
        contexts = grasp_contexts(hand, grasps, config)
    act = actuation_from_routes(hand)
    names, lower, upper = arm_search_space(hand)

    infeasible = tuple(sorted(g.id for g in desired if contexts[g.id].start is None))
    excluded = {gid: 1 for gid in infeasible}
    considered = [g.id for g in desired if g.id not in excluded]
    if not considered:
        raise StageError("no achievable grasps: every stability QP is infeasible")

    evaluations = 0
    iteration = 0
    converged = True
    metrics: dict[str, float] = {}
    iteration_objectives: list[float] = []
    params: dict[str, float] = merged_arm_params(hand, names, (lower + upper) / 2.0)
    while True:
        iteration += 1
        ids = list(considered)

        def objective(x, ids=ids):
            p = merged_arm_params(hand, names, x)
            m = _stability_metrics(contexts, ids, act, p, config.qp_tolerance)
            return root_sum_squares(m.values())

        res = cmaes_minimize(
            objective,
            CmaesSettings(
                x0=(lower + upper) / 2.0,
                lower=lower,
                upper=upper,
                population=config.population,
                ftol=config.stage_ftol[0],
                max_evals=config.max_evals[0],
                seed=stage_seed(config.seed, 1, iteration),
            ),
        )
        evaluations += res.evals
        converged = res.converged
        params = merged_arm_params(hand, names, res.x)
        metrics = _stability_metrics(contexts, ids, act, params, config.qp_tolerance)
        iteration_objectives.append(root_sum_squares(metrics.values()))
        over = sorted(gid for gid in ids if metrics[gid] > config.torque_threshold)
        if not over:
            break
        for gid in over:
            excluded[gid] = iteration
        considered = [gid for gid in considered if gid not in over]
        if not considered:
            raise StageError("no achievable grasps: all excluded by the torque threshold")

    objective_value = root_sum_squares(metrics.values())
    return StageResult(
        stage=1,
        params=params,
        per_grasp=metrics,
        excluded=excluded,
        objective=objective_value,
        evaluations=evaluations,
        seed=config.seed,
        converged=converged,
        infeasible=infeasible,
        f_trq_min=objective_value,
        iteration_objectives=tuple(iteration_objectives),
    )


# ---------------------------------------------------------------------------
# stage 2: posture manifold, inter-tendon


def travel_error(hand: HandModel, params: Mapping[str, float], theta,
                 M: np.ndarray) -> float:
    """Norm of the best-fit gap between motor travel and required tendon travel."""
    s = tendon_excursion(hand, params, theta)
    fit = solve_least_squares(M, s)
    return float(np.linalg.norm(fit.residual))


def optimize_inter_tendon(
    hand: HandModel,
    grasps: Sequence[GraspRecord],
    config: DesignConfig,
    stage1: StageResult,
    contexts: Mapping[str, GraspContext] | None = None,
) -> StageResult:
    if stage1.f_trq_min is None:
        raise StageError("missing stage-1 result (f_trq_min)")
    pool = [g for g in grasps if g.tag in ("desired", "opening")]
    desired_count = sum(1 for g in pool if g.tag == "desired")
    if 2 * desired_count != len(pool):
        raise StageError("stage 2 expects desired/opening records in pairs")
    if contexts is None:
        contexts = grasp_contexts(hand, grasps, config)
    act = actuation_from_routes(hand)
    M = motor_connection_from_hand(hand).matrix
    names, lower, upper = arm_search_space(hand)
    stage1_ids = sorted(stage1.per_grasp)
    f_min = stage1.f_trq_min
    eps = config.stage2_constraint_tol
    penalty = config.stage2_penalty

    pairs: dict[str, list[GraspRecord]] = {}
    for g in pool:
        pairs.setdefault(g.pair, []).append(g)

    excluded: dict[str, int] = {}
    considered = sorted(pairs)
    evaluations = 0
    iteration = 0
    notes: list[str] = []
    iteration_objectives: list[float] = []
    while True:
        iteration += 1
        records = [g for pid in considered for g in pairs[pid]]

        def f_inter(p, records=records):
            return root_sum_squares(
                travel_error(hand, p, g.theta(), M) for g in records
            )

        def objective(x, records=records):
            p = merged_arm_params(hand, names, x)
            value = f_inter(p, records)
            f_trq = root_sum_squares(
                _stability_metrics(contexts, stage1_ids, act, p, config.qp_tolerance).values()
            )
            return value + penalty * max(0.0, f_trq - f_min - eps)

        res = cmaes_minimize(
            objective,
            CmaesSettings(
                x0=(lower + upper) / 2.0,
                lower=lower,
                upper=upper,
                population=config.population,
                ftol=config.stage_ftol[1],
                max_evals=config.max_evals[1],
                seed=stage_seed(config.seed, 2, iteration),
            ),
        )
        evaluations += res.evals
        params = merged_arm_params(hand, names, res.x)
        metrics = {
            g.id: travel_error(hand, params, g.theta(), M)
            for pid in considered
            for g in pairs[pid]
        }
        iteration_objectives.append(root_sum_squares(metrics.values()))
        over_pairs = sorted(
            pid
            for pid in considered
            if any(metrics[g.id] > config.travel_threshold for g in pairs[pid])
        )
        if not over_pairs:
            f_trq_opt = root_sum_squares(
                _stability_metrics(contexts, stage1_ids, act, params, config.qp_tolerance).values()
            )
            if f_trq_opt > f_min + eps:
                notes.append(
                    f"stage-1 constraint violated at the optimum "
                    f"(f_trq {f_trq_opt:.6g} > {f_min:.6g} + {eps:g})"
                )
            break
        for pid in over_pairs:
            for g in pairs[pid]:
                excluded[g.id] = iteration
        considered = [pid for pid in considered if pid not in over_pairs]
        if not considered:
            raise StageError("no achievable grasps: all excluded by the travel threshold")

    return StageResult(
        stage=2,
        params=params,
        per_grasp=metrics,
        excluded=excluded,
        objective=root_sum_squares(metrics.values()),
        evaluations=evaluations,
        seed=config.seed,
        converged=res.converged and not notes,
        notes=tuple(notes),
        iteration_objectives=tuple(iteration_objectives),
    )


# ---------------------------------------------------------------------------
# stage 3: posture manifold, intra-tendon


@dataclass(frozen=True)
class SpringBalance:
    tensions: np.ndarray
    delta_tau: np.ndarray  # A t - tau_spr
    metric: float  # Nmm


def spring_balance_qp(A_at_theta, tau_spr) -> SpringBalance:
    """Best nonnegative tendon tensions against the spring torque vector."""
    A = np.atleast_2d(np.asarray(A_at_theta, dtype=float))
    tau = np.asarray(tau_spr, dtype=float).ravel()
    t, residual = solve_nnls(A, tau)
    return SpringBalance(tensions=t, delta_tau=A @ t - tau, metric=float(residual))


@dataclass(frozen=True)
class ChainUnit:
    """Chains optimized together because they share spring parameter slots."""

    chains: tuple[str, ...]
    stiffness_slots: tuple[str, ...]
    preload_slots: tuple[str, ...]


def _golden_min(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimizer for a unimodal 1-D function."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return c if fc < fd else d


_SCREEN_COMBO_CAP = 256


def _screen_anchor(objective, stiffness_catalogs, lower, upper):
    """Best (stiffness combo, conditional preloads) over the full catalog grid.

    The conditional problem in the preloads is convex (each grasp metric is a
    distance from an affine function of the preloads to a convex cone), so a
    couple of cyclic golden-section passes per combo rank combos reliably.
    Returns None when the combination count exceeds the enumeration cap.
    """
    sizes = [len(c) for c in stiffness_catalogs]
    total = 1
    for s in sizes:
        total *= s
    if total > _SCREEN_COMBO_CAP:
        return None
    n_stiff = len(stiffness_catalogs)
    cont = list(range(n_stiff, lower.size))
    best_val, best_x = np.inf, None
    for combo in itertools.product(*(range(s) for s in sizes)):
        x = (lower + upper) / 2.0
        for i, idx in enumerate(combo):
            x[i] = stiffness_catalogs[i][idx]
        for _ in range(2):
            for i in cont:
                if upper[i] - lower[i] <= 0:
                    continue

                def f1d(v, i=i, x=x):
                    x[i] = v
                    return objective(x)

                x[i] = _golden_min(f1d, lower[i], upper[i],
                                   tol=1e-3 * (upper[i] - lower[i]))
        val = objective(x)
        if val < best_val:
            best_val, best_x = val, x.copy()
    return best_x


def spring_units(hand: HandModel) -> list[ChainUnit]:
    slot_map: dict[tuple[tuple[str, ...], tuple[str, ...]], list[str]] = {}
    for chain in hand.chains:
        stiff, pre = [], []
        for j in hand.joints:
            if j.chain != chain.name or j.spring is None:
                continue
            if j.spring.stiffness_slot not in stiff:
                stiff.append(j.spring.stiffness_slot)
            if j.spring.preload_slot not in pre:
                pre.append(j.spring.preload_slot)
        if not stiff and not pre:
            continue  # springless chain (e.g. rigid roll transmissions)
        key = (tuple(stiff), tuple(pre))
        slot_map.setdefault(key, []).append(chain.name)
    return [
        ChainUnit(chains=tuple(chains), stiffness_slots=key[0], preload_slots=key[1])
        for key, chains in sorted(slot_map.items(), key=lambda kv: kv[1])
    ]


def _chain_rows_cols(hand: HandModel, chain: str) -> tuple[list[int], list[int]]:
    mask = sprung_dofs(hand)
    rows = [d for d in hand.chain_dofs(chain) if mask[d]]
    sprung_joints = {
        j.id
        for j in hand.joints
        if j.chain == chain and any(mask[hand.dof_index(j.id) + d] for d in range(j.dof))
    }
    cols = [
        k
        for k, t in enumerate(hand.tendons)
        if any(c.joint in sprung_joints for c in t.crossings)
    ]
    return rows, cols


def chain_spring_metric(
    hand: HandModel,
    chain: str,
    act: ActuationMatrix,
    params: Mapping[str, float],
    theta: np.ndarray,
) -> float:
    rows, cols = _chain_rows_cols(hand, chain)
    if not rows:
        return 0.0
    A = act.evaluate(params, theta)[np.ix_(rows, cols)]
    chain_joints = {j.id for j in hand.joints if j.chain == chain}
    tau = spring_torques(hand, params, theta, joint_ids=chain_joints)[rows]
    return spring_balance_qp(A, tau).metric


def optimize_intra_tendon(
    hand: HandModel,
    grasps: Sequence[GraspRecord],
    config: DesignConfig,
    arm_params: Mapping[str, float],
) -> StageResult:
    desired = [g for g in grasps if g.tag == "desired"]
    if not desired:
        raise StageError("no desired grasps")
    act = actuation_from_routes(hand)
    units = spring_units(hand)
    stiffness_by_name = {s.name: s for s in hand.layout.stiffness}
    preload_by_name = {s.name: s for s in hand.layout.preloads}

    spring_params: dict[str, float] = {}
    excluded: dict[str, int] = {}
    unit_metrics: dict[str, dict[str, float]] = {}  # chain -> grasp -> metric
    evaluations = 0
    converged = True
    notes: list[str] = []

    for u_idx, unit in enumerate(units):
        for slot in unit.stiffness_slots:
            if not stiffness_by_name[slot].catalog:
                raise StageError(f"empty stiffness catalog for slot {slot}")
        dims = list(unit.stiffness_slots) + list(unit.preload_slots)
        lower = np.array(
            [stiffness_by_name[s].catalog[0] for s in unit.stiffness_slots]
            + [preload_by_name[s].lower for s in unit.preload_slots]
        )
        upper = np.array(
            [stiffness_by_name[s].catalog[-1] for s in unit.stiffness_slots]
            + [preload_by_name[s].upper for s in unit.preload_slots]
        )
        catalogs = {
            i: np.array(stiffness_by_name[s].catalog)
            for i, s in enumerate(unit.stiffness_slots)
        }
        thresholds = {
            chain: config.spring_threshold(hand.chain_kind(chain)) for chain in unit.chains
        }

        considered = [g.id for g in desired]
        by_id = {g.id: g for g in desired}
        iteration = 0
        while True:
            iteration += 1
            ids = list(considered)

            def unit_params(x):
                p = dict(arm_params)
                p.update({slot: float(v) for slot, v in zip(dims, x)})
                return p

            def metrics_at(x, ids=ids):
                p = unit_params(x)
                return {
                    chain: {
                        gid: chain_spring_metric(hand, chain, act, p, by_id[gid].theta())
                        for gid in ids
                    }
                    for chain in unit.chains
                }

            def objective(x, ids=ids):
                per_chain = metrics_at(x, ids)
                return root_sum_squares(
                    m for chain in unit.chains for m in per_chain[chain].values()
                )

            # restarts with a fresh start point and doubled population pull the
            # discrete stiffness search out of neighboring catalog cells; the
            # first restart anchors at the screened catalog-grid optimum
            base_pop = config.population or (4 + int(np.log(len(dims)) * 3))
            anchor = _screen_anchor(
                objective,
                [np.array(stiffness_by_name[s].catalog) for s in unit.stiffness_slots],
                lower,
                upper,
            )
            best = None
            if anchor is not None:
                best = CmaesResult(x=anchor, fun=float(objective(anchor)),
                                   evals=1, generations=0, converged=True)
                evaluations += 1
            for restart in range(max(1, config.stage3_restarts)):
                seed = stage_seed(config.seed, 3, iteration, extra=u_idx * 101 + restart)
                if restart == 0:
                    x0 = anchor if anchor is not None else (lower + upper) / 2.0
                else:
                    x0 = np.random.default_rng(seed).uniform(lower, upper)
                res = cmaes_minimize(
                    objective,
                    CmaesSettings(
                        x0=x0,
                        lower=lower,
                        upper=upper,
                        catalogs=catalogs,
                        population=base_pop * 2**restart,
                        ftol=config.stage_ftol[2],
                        max_evals=config.max_evals[2],
                        seed=seed,
                    ),
                )
                evaluations += res.evals
                if best is None or res.fun < best.fun:
                    best = res
            if unit.preload_slots:
                # plateau dynamics in the discrete dimensions stall step-size
                # adaptation; polish the continuous dims with stiffness frozen
                frozen_lower = lower.copy()
                frozen_upper = upper.copy()
                n_stiff = len(unit.stiffness_slots)
                frozen_lower[:n_stiff] = best.x[:n_stiff]
                frozen_upper[:n_stiff] = best.x[:n_stiff]
                res = cmaes_minimize(
                    objective,
                    CmaesSettings(
                        x0=best.x,
                        lower=frozen_lower,
                        upper=frozen_upper,
                        population=config.population,
                        ftol=min(config.stage_ftol[2], 1e-10),
                        max_evals=config.max_evals[2],
                        seed=stage_seed(config.seed, 3, iteration, extra=u_idx * 101 + 97),
                    ),
                )
                evaluations += res.evals
                if res.fun < best.fun:
                    best = res
            converged = converged and best.converged
            per_chain = metrics_at(best.x, ids)
            over = sorted(
                gid
                for gid in ids
                if any(per_chain[chain][gid] > thresholds[chain] for chain in unit.chains)
            )
            if not over:
                break
            for gid in over:
                excluded[gid] = max(excluded.get(gid, 0), iteration)
            considered = [gid for gid in considered if gid not in over]
            if not considered:
                raise StageError(
                    f"no achievable grasps in chains {unit.chains}: all excluded"
                )

        spring_params.update({slot: float(v) for slot, v in zip(dims, best.x)})
        for chain in unit.chains:
            unit_metrics[chain] = per_chain[chain]

    # merge: a grasp counts as considered when no chain excluded it
    considered_ids = [g.id for g in desired if g.id not in excluded]
    full_params = dict(arm_params)
    full_params.update(spring_params)
    per_grasp = {}
    for gid in considered_ids:
        g = next(x for x in desired if x.id == gid)
        per_grasp[gid] = root_sum_squares(
            chain_spring_metric(hand, chain.name, act, full_params, g.theta())
            for chain in hand.chains
        )
    return StageResult(
        stage=3,
        params=spring_params,
        per_grasp=per_grasp,
        excluded=excluded,
        objective=root_sum_squares(per_grasp.values()),
        evaluations=evaluations,
        seed=config.seed,
        converged=converged,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# pipeline


def run_pipeline(hand: HandModel, grasps: Sequence[GraspRecord],
                 config: DesignConfig) -> DesignReport:
    contexts = grasp_contexts(hand, grasps, config)
    stages: list[StageResult] = []
    failed, error = None, None
    try:
        s1 = optimize_torque_manifold(hand, grasps, config, contexts=contexts)
        stages.append(s1)
        s2 = optimize_inter_tendon(hand, grasps, config, s1, contexts=contexts)
        stages.append(s2)
        s3 = optimize_intra_tendon(hand, grasps, config, s2.params)
        stages.append(s3)
    except StageError as exc:
        failed = len(stages) + 1
        error = str(exc)
    params: dict[str, float] = {}
    for s in stages:
        params.update(s.params)
    return DesignReport(
        hand_name=hand.name,
        design_case=hand.design_case,
        seed=config.seed,
        config_hash=config.hash(),
        version=__version__,
        stages=tuple(stages),
        params=params,
        failed_stage=failed,
        error=error,
    )
