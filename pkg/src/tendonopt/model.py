"""Domain types and file ingestion for hand models, grasp sets and run configuration.

All angles are radians, lengths mm, torques Nmm, forces N. Input files are
JSON documents carrying a ``schema`` version string; the exact layouts are
documented in ``docs/formats.md``. Loaded objects are frozen dataclasses and
safe to share between threads.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

HAND_SCHEMA = "hand-model/1"
GRASP_SCHEMA = "grasp-set/1"
CONFIG_SCHEMA = "design-config/1"

_UNIT_TOL = 1e-9


class ModelError(ValueError):
    """Invalid hand model, grasp set or config (message carries the field path)."""


def _fail(path: str, msg: str):
    raise ModelError(f"{path}: {msg}")


def _require(data: Mapping, key: str, path: str):
    if key not in data:
        _fail(path, f"missing required field '{key}'")
    return data[key]


def _vec3(raw, path: str) -> tuple[float, float, float]:
    try:
        x, y, z = (float(v) for v in raw)
    except (TypeError, ValueError):
        _fail(path, f"expected a 3-vector, got {raw!r}")
    return (x, y, z)


@dataclass(frozen=True)
class LinkSpec:
    id: str
    parent_joint: str | None  # None only for the palm root


@dataclass(frozen=True)
class SpringSpec:
    kind: str  # "torsional" (Nmm/rad, rad) or "linear" (N/mm, mm, on a u-joint tendon)
    stiffness_slot: str
    preload_slot: str
    sign: int = 1  # drive direction: -1 when the joint's tendon flexes it negative
    tendon_index: int | None = None  # u-joint tendon the linear spring acts on


@dataclass(frozen=True)
class UJointGeometrySpec:
    """Parametric attachment geometry of a two-DoF universal joint.

    Attachment points sit on circles of a shared radius on the lower and
    upper platforms, separated along the joint z axis by a shared height.
    Both dimensions are parameter slots so the optimizer can search them.
    """

    radius_slot: str
    height_slot: str
    angles_deg: tuple[float, ...]  # one attachment angle per tendon
    back_index: int  # tendon index carrying the restoring spring


@dataclass(frozen=True)
class JointSpec:
    id: str
    kind: str  # "revolute" | "universal"
    parent_link: str
    child_link: str
    origin_xyz: tuple[float, float, float]
    origin_rpy: tuple[float, float, float]
    axes: tuple[tuple[float, float, float], ...]  # 1 axis (revolute) or 2 (universal)
    limits: tuple[tuple[float, float], ...]  # per DoF, closed interval
    chain: str
    spring: SpringSpec | None = None
    geometry: UJointGeometrySpec | None = None
    opening: tuple[float, ...] | None = None  # per-DoF opening value, default lower limit

    @property
    def dof(self) -> int:
        return 2 if self.kind == "universal" else 1

    def opening_values(self) -> tuple[float, ...]:
        if self.opening is not None:
            return self.opening
        return tuple(lo for lo, _ in self.limits)


@dataclass(frozen=True)
class Crossing:
    joint: str
    slot: str | None = None  # moment-arm slot (revolute crossings)
    sign: int = 1
    tendon_index: int | None = None  # u-joint attachment index (config-dependent)

    @property
    def config_dependent(self) -> bool:
        return self.tendon_index is not None


@dataclass(frozen=True)
class TendonRoute:
    id: str
    motors: tuple[str, ...]  # usually one; two for a motor-motor loop over an idler
    crossings: tuple[Crossing, ...]
    termination: str


@dataclass(frozen=True)
class MotorSpec:
    id: str
    pulley_radius: float  # mm


@dataclass(frozen=True)
class ArmSlot:
    name: str
    lower: float
    upper: float
    fixed: float | None = None  # excluded from search when set


@dataclass(frozen=True)
class StiffnessSlot:
    name: str
    catalog: tuple[float, ...]  # sorted ascending, manufacturer values
    unit: str = "Nmm/rad"


@dataclass(frozen=True)
class PreloadSlot:
    name: str
    lower: float
    upper: float
    unit: str = "rad"


@dataclass(frozen=True)
class ParamLayout:
    moment_arms: tuple[ArmSlot, ...]
    stiffness: tuple[StiffnessSlot, ...]
    preloads: tuple[PreloadSlot, ...]

    def arm_slot(self, name: str) -> ArmSlot:
        for s in self.moment_arms:
            if s.name == name:
                return s
        raise KeyError(name)

    def slot_names(self) -> set[str]:
        return (
            {s.name for s in self.moment_arms}
            | {s.name for s in self.stiffness}
            | {s.name for s in self.preloads}
        )

    def searchable_arms(self) -> tuple[ArmSlot, ...]:
        return tuple(s for s in self.moment_arms if s.fixed is None)


@dataclass(frozen=True)
class ChainSpec:
    name: str
    kind: str  # "thumb" | "finger"


@dataclass(frozen=True)
class HandModel:
    name: str
    design_case: str  # case1 | case2 | case3 | generic
    links: tuple[LinkSpec, ...]
    joints: tuple[JointSpec, ...]
    tendons: tuple[TendonRoute, ...]
    motors: tuple[MotorSpec, ...]
    layout: ParamLayout
    chains: tuple[ChainSpec, ...]

    # ---- derived lookups -------------------------------------------------

    def joint(self, joint_id: str) -> JointSpec:
        for j in self.joints:
            if j.id == joint_id:
                return j
        raise KeyError(joint_id)

    def link(self, link_id: str) -> LinkSpec:
        for l in self.links:
            if l.id == link_id:
                return l
        raise KeyError(link_id)

    def motor(self, motor_id: str) -> MotorSpec:
        for m in self.motors:
            if m.id == motor_id:
                return m
        raise KeyError(motor_id)

    @property
    def root_link(self) -> str:
        return next(l.id for l in self.links if l.parent_joint is None)

    @property
    def dof_count(self) -> int:
        return sum(j.dof for j in self.joints)

    def dof_index(self, joint_id: str) -> int:
        """Index of the joint's first DoF in the global joint-angle vector."""
        i = 0
        for j in self.joints:
            if j.id == joint_id:
                return i
            i += j.dof
        raise KeyError(joint_id)

    def dof_labels(self) -> tuple[str, ...]:
        labels: list[str] = []
        for j in self.joints:
            if j.kind == "universal":
                labels += [f"{j.id}.pitch", f"{j.id}.yaw"]
            else:
                labels.append(j.id)
        return tuple(labels)

    def dof_limits(self) -> np.ndarray:
        return np.array([lim for j in self.joints for lim in j.limits], dtype=float)

    def opening_pose(self) -> np.ndarray:
        return np.array(
            [v for j in self.joints for v in j.opening_values()], dtype=float
        )

    def chain_dofs(self, chain: str) -> list[int]:
        out = []
        for j in self.joints:
            if j.chain == chain:
                base = self.dof_index(j.id)
                out += list(range(base, base + j.dof))
        return out

    def chain_tendons(self, chain: str) -> list[int]:
        joint_ids = {j.id for j in self.joints if j.chain == chain}
        return [
            k
            for k, t in enumerate(self.tendons)
            if any(c.joint in joint_ids for c in t.crossings)
        ]

    def tendon_index(self, tendon_id: str) -> int:
        for k, t in enumerate(self.tendons):
            if t.id == tendon_id:
                return k
        raise KeyError(tendon_id)

    def chain_kind(self, chain: str) -> str:
        for c in self.chains:
            if c.name == chain:
                return c.kind
        raise KeyError(chain)


@dataclass(frozen=True)
class ContactRecord:
    link: str
    position: tuple[float, float, float]  # link frame, mm
    normal: tuple[float, float, float]  # inward unit normal, link frame
    mu: float


@dataclass(frozen=True)
class GraspRecord:
    id: str
    obj: str
    tag: str  # "desired" | "opening"
    pair: str
    joint_angles: tuple[float, ...]
    contacts: tuple[ContactRecord, ...]

    def theta(self) -> np.ndarray:
        return np.array(self.joint_angles, dtype=float)


@dataclass(frozen=True)
class DesignConfig:
    pyramid_edges: int = 8
    qp_tolerance: float = 1e-10
    torque_threshold: float = 0.1  # unitless normalized torque
    travel_threshold: float = 2.0  # mm
    spring_torque_thresholds: Mapping[str, float] = field(
        default_factory=lambda: {"thumb": 2.0, "finger": 5.0}
    )  # Nmm per chain kind
    stage_ftol: tuple[float, float, float] = (1e-6, 1e-3, 1e-3)
    stage2_constraint_tol: float = 1e-3
    stage2_penalty: float = 1e6
    population: int | None = None
    max_evals: tuple[int, int, int] = (60000, 30000, 30000)
    stage3_restarts: int = 3
    seed: int = 0
    posture_grid: int = 200
    torque_grid_points: int = 4000
    workers: int = 1

    def __post_init__(self):
        if self.pyramid_edges < 3:
            _fail("pyramid_edges", "need at least 3 pyramid edges")
        for name in ("qp_tolerance", "torque_threshold", "travel_threshold",
                     "stage2_constraint_tol", "stage2_penalty"):
            if getattr(self, name) <= 0:
                _fail(name, "must be > 0")
        if any(t <= 0 for t in self.stage_ftol):
            _fail("stage_ftol", "tolerances must be > 0")
        if any(v <= 0 for v in self.spring_torque_thresholds.values()):
            _fail("spring_torque_thresholds", "thresholds must be > 0")

    def spring_threshold(self, chain_kind: str) -> float:
        return float(self.spring_torque_thresholds[chain_kind])

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "pyramid_edges": self.pyramid_edges,
            "qp_tolerance": self.qp_tolerance,
            "torque_threshold": self.torque_threshold,
            "travel_threshold": self.travel_threshold,
            "spring_torque_thresholds": dict(self.spring_torque_thresholds),
            "stage_ftol": list(self.stage_ftol),
            "stage2_constraint_tol": self.stage2_constraint_tol,
            "stage2_penalty": self.stage2_penalty,
            "population": self.population,
            "max_evals": list(self.max_evals),
            "stage3_restarts": self.stage3_restarts,
            "seed": self.seed,
            "posture_grid": self.posture_grid,
            "torque_grid_points": self.torque_grid_points,
            "workers": self.workers,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_CONFIG_KEYS = {
    "pyramid_edges", "qp_tolerance", "torque_threshold", "travel_threshold",
    "spring_torque_thresholds", "stage_ftol", "stage2_constraint_tol",
    "stage2_penalty", "population", "max_evals", "stage3_restarts", "seed",
    "posture_grid", "torque_grid_points", "workers",
}


def load_config(path) -> DesignConfig:
    data = _read_json(path, CONFIG_SCHEMA)
    kwargs = {}
    for key, value in data.items():
        if key == "schema":
            continue
        if key not in _CONFIG_KEYS:
            _fail(f"config.{key}", "unknown field")
        if key in ("stage_ftol", "max_evals"):
            value = tuple(value)
        kwargs[key] = value
    return DesignConfig(**kwargs)


# ---------------------------------------------------------------------------
# hand model loading


def _read_json(path, schema: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ModelError(f"{path}: cannot read file ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ModelError(f"{path}: top level must be an object")
    got = data.get("schema")
    if got != schema:
        raise ModelError(f"{path}: schema is {got!r}, expected {schema!r}")
    return data


def _parse_spring(raw: Mapping, path: str) -> SpringSpec:
    kind = _require(raw, "kind", path)
    if kind not in ("torsional", "linear"):
        _fail(path, f"unknown spring kind {kind!r}")
    sign = int(raw.get("sign", 1))
    if sign not in (1, -1):
        _fail(path, "spring sign must be +1 or -1")
    return SpringSpec(
        kind=kind,
        stiffness_slot=_require(raw, "stiffness_slot", path),
        preload_slot=_require(raw, "preload_slot", path),
        sign=sign,
        tendon_index=raw.get("tendon_index"),
    )


def _parse_joint(raw: Mapping, path: str) -> JointSpec:
    kind = _require(raw, "kind", path)
    if kind not in ("revolute", "universal"):
        _fail(path, f"unknown joint kind {kind!r}")
    if kind == "revolute":
        axes = (_vec3(_require(raw, "axis", path), f"{path}.axis"),)
        limits_raw = [_require(raw, "limits", path)]
    else:
        axes_raw = raw.get("axes", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        if len(axes_raw) != 2:
            _fail(f"{path}.axes", "universal joints carry exactly 2 DoF")
        axes = tuple(_vec3(a, f"{path}.axes") for a in axes_raw)
        limits_raw = _require(raw, "limits", path)
        if len(limits_raw) != 2:
            _fail(f"{path}.limits", "universal joints need one limit pair per DoF")
    limits = []
    for lim in limits_raw:
        lo, hi = float(lim[0]), float(lim[1])
        if not lo < hi:
            _fail(f"{path}.limits", f"degenerate interval [{lo}, {hi}]")
        limits.append((lo, hi))
    for ax in axes:
        if abs(math.sqrt(sum(a * a for a in ax)) - 1.0) > _UNIT_TOL:
            _fail(f"{path}.axis", "rotation axes must be unit vectors")
    geometry = None
    if raw.get("geometry") is not None:
        g = raw["geometry"]
        geometry = UJointGeometrySpec(
            radius_slot=_require(g, "radius_slot", f"{path}.geometry"),
            height_slot=_require(g, "height_slot", f"{path}.geometry"),
            angles_deg=tuple(float(a) for a in _require(g, "angles_deg", f"{path}.geometry")),
            back_index=int(_require(g, "back_index", f"{path}.geometry")),
        )
        if len(geometry.angles_deg) < 3:
            _fail(f"{path}.geometry", "need at least 3 attachment points")
        if not 0 <= geometry.back_index < len(geometry.angles_deg):
            _fail(f"{path}.geometry", "back_index out of range")
    if kind == "universal" and geometry is None:
        _fail(path, "universal joints require a geometry block")
    opening = None
    if raw.get("opening") is not None:
        vals = raw["opening"]
        if not isinstance(vals, list):
            vals = [vals]
        opening = tuple(float(v) for v in vals)
        if len(opening) != len(limits):
            _fail(f"{path}.opening", "one opening value per DoF")
        for v, (lo, hi) in zip(opening, limits):
            if not lo - _UNIT_TOL <= v <= hi + _UNIT_TOL:
                _fail(f"{path}.opening", f"opening value {v} outside limits")
    return JointSpec(
        id=_require(raw, "id", path),
        kind=kind,
        parent_link=_require(raw, "parent_link", path),
        child_link=_require(raw, "child_link", path),
        origin_xyz=_vec3(raw.get("origin_xyz", [0, 0, 0]), f"{path}.origin_xyz"),
        origin_rpy=_vec3(raw.get("origin_rpy", [0, 0, 0]), f"{path}.origin_rpy"),
        axes=axes,
        limits=tuple(limits),
        chain=_require(raw, "chain", path),
        spring=_parse_spring(raw["spring"], f"{path}.spring") if raw.get("spring") else None,
        geometry=geometry,
        opening=opening,
    )


def _parse_layout(raw: Mapping, path: str) -> ParamLayout:
    arms = []
    for i, a in enumerate(raw.get("moment_arms", [])):
        p = f"{path}.moment_arms[{i}]"
        lo, hi = (float(v) for v in _require(a, "bounds", p))
        if lo <= 0:
            _fail(p, "moment-arm lower bound must be > 0")
        if not lo <= hi:
            _fail(p, f"inverted bounds [{lo}, {hi}]")
        fixed = a.get("fixed")
        if fixed is not None:
            fixed = float(fixed)
            if not lo <= fixed <= hi:
                _fail(p, f"fixed value {fixed} outside bounds")
        arms.append(ArmSlot(_require(a, "slot", p), lo, hi, fixed))
    stiff = []
    for i, s in enumerate(raw.get("stiffness", [])):
        p = f"{path}.stiffness[{i}]"
        catalog = tuple(float(v) for v in _require(s, "catalog", p))
        if not catalog:
            _fail(p, "stiffness catalog is empty")
        if list(catalog) != sorted(catalog):
            _fail(p, "stiffness catalog must be sorted ascending")
        if catalog[0] <= 0:
            _fail(p, "stiffness values must be > 0")
        stiff.append(StiffnessSlot(_require(s, "slot", p), catalog, s.get("unit", "Nmm/rad")))
    pre = []
    for i, s in enumerate(raw.get("preloads", [])):
        p = f"{path}.preloads[{i}]"
        lo, hi = (float(v) for v in _require(s, "bounds", p))
        if not lo <= hi:
            _fail(p, f"inverted bounds [{lo}, {hi}]")
        pre.append(PreloadSlot(_require(s, "slot", p), lo, hi, s.get("unit", "rad")))
    return ParamLayout(tuple(arms), tuple(stiff), tuple(pre))


def load_hand_model(path) -> HandModel:
    """Load and validate a hand model file (schema ``hand-model/1``)."""
    data = _read_json(path, HAND_SCHEMA)
    links = tuple(
        LinkSpec(_require(l, "id", f"links[{i}]"), l.get("parent_joint"))
        for i, l in enumerate(data.get("links", []))
    )
    joints = tuple(
        _parse_joint(j, f"joints[{i}]") for i, j in enumerate(data.get("joints", []))
    )
    chains = tuple(
        ChainSpec(_require(c, "name", f"chains[{i}]"), _require(c, "kind", f"chains[{i}]"))
        for i, c in enumerate(data.get("chains", []))
    )
    motors = tuple(
        MotorSpec(
            _require(m, "id", f"motors[{i}]"),
            float(_require(m, "pulley_radius", f"motors[{i}]")),
        )
        for i, m in enumerate(data.get("motors", []))
    )
    tendons = []
    for i, t in enumerate(data.get("tendons", [])):
        p = f"tendons[{i}]"
        raw_motors = t.get("motors", [t["motor"]] if "motor" in t else None)
        if not raw_motors:
            _fail(p, "missing required field 'motor' or 'motors'")
        crossings = []
        for k, c in enumerate(t.get("crossings", [])):
            cp = f"{p}.crossings[{k}]"
            crossings.append(
                Crossing(
                    joint=_require(c, "joint", cp),
                    slot=c.get("slot"),
                    sign=int(c.get("sign", 1)),
                    tendon_index=c.get("tendon_index"),
                )
            )
        tendons.append(
            TendonRoute(
                id=_require(t, "id", p),
                motors=tuple(raw_motors),
                crossings=tuple(crossings),
                termination=_require(t, "termination", p),
            )
        )
    hand = HandModel(
        name=data.get("name", "hand"),
        design_case=data.get("design_case", "generic"),
        links=links,
        joints=joints,
        tendons=tuple(tendons),
        motors=motors,
        layout=_parse_layout(data.get("parameters", {}), "parameters"),
        chains=chains,
    )
    validate_hand(hand)
    return hand


def validate_hand(hand: HandModel):
    """Check all structural invariants; raises ModelError with a field path."""
    link_ids = [l.id for l in hand.links]
    if len(set(link_ids)) != len(link_ids):
        _fail("links", "duplicate link ids")
    roots = [l for l in hand.links if l.parent_joint is None]
    if len(roots) != 1:
        _fail("links", f"expected exactly one root (palm) link, found {len(roots)}")
    joint_ids = [j.id for j in hand.joints]
    if len(set(joint_ids)) != len(joint_ids):
        _fail("joints", "duplicate joint ids")
    chain_names = {c.name for c in hand.chains}
    for c in hand.chains:
        if c.kind not in ("thumb", "finger"):
            _fail(f"chains.{c.name}", f"unknown chain kind {c.kind!r}")
    by_child: dict[str, str] = {}
    for j in hand.joints:
        if j.parent_link not in link_ids:
            _fail(f"joints.{j.id}", f"unknown parent link {j.parent_link!r}")
        if j.child_link not in link_ids:
            _fail(f"joints.{j.id}", f"unknown child link {j.child_link!r}")
        if j.child_link in by_child:
            _fail(f"joints.{j.id}", f"link {j.child_link!r} has two parent joints")
        by_child[j.child_link] = j.id
        if j.chain not in chain_names:
            _fail(f"joints.{j.id}", f"unknown chain {j.chain!r}")
        if j.spring is not None:
            if j.spring.kind == "linear" and j.kind != "universal":
                _fail(f"joints.{j.id}.spring", "linear springs live on universal joints")
            if j.spring.kind == "linear" and j.spring.tendon_index is None:
                _fail(f"joints.{j.id}.spring", "linear spring needs a tendon_index")
    # the joint/link graph must be a forest rooted at the palm
    for l in hand.links:
        if l.parent_joint is None:
            continue
        if l.parent_joint not in joint_ids:
            _fail(f"links.{l.id}", f"unknown parent joint {l.parent_joint!r}")
        if by_child.get(l.id) != l.parent_joint:
            _fail(f"links.{l.id}", "parent_joint does not match the joint's child_link")
    for l in hand.links:
        seen = set()
        cur = l
        while cur.parent_joint is not None:
            if cur.id in seen:
                _fail(f"links.{l.id}", "cycle in kinematic graph")
            seen.add(cur.id)
            cur = hand.link(hand.joint(cur.parent_joint).parent_link)

    slot_names = hand.layout.slot_names()
    motor_ids = {m.id for m in hand.motors}
    for t in hand.tendons:
        if not 1 <= len(t.motors) <= 2:
            _fail(f"tendons.{t.id}", "a tendon connects to one motor (or two via an idler loop)")
        for m in t.motors:
            if m not in motor_ids:
                _fail(f"tendons.{t.id}", f"unknown motor id {m!r}")
        if t.termination not in link_ids:
            _fail(f"tendons.{t.id}", f"unknown termination link {t.termination!r}")
        depth_prev = -1
        descending = False  # loop tendons run proximal-distal, then back
        for c in t.crossings:
            if c.joint not in joint_ids:
                _fail(f"tendons.{t.id}", f"unknown joint id {c.joint!r}")
            joint = hand.joint(c.joint)
            if c.config_dependent:
                if joint.kind != "universal":
                    _fail(f"tendons.{t.id}", f"config-dependent crossing on revolute joint {c.joint!r}")
                if not 0 <= c.tendon_index < len(joint.geometry.angles_deg):
                    _fail(f"tendons.{t.id}", f"tendon_index {c.tendon_index} out of range on {c.joint!r}")
            else:
                if c.slot is None:
                    _fail(f"tendons.{t.id}", f"crossing on {c.joint!r} needs a moment-arm slot")
                if c.slot not in slot_names:
                    _fail(f"tendons.{t.id}", f"unknown parameter slot {c.slot!r}")
                if c.sign not in (1, -1):
                    _fail(f"tendons.{t.id}", f"crossing sign must be +1 or -1")
            depth = _joint_depth(hand, c.joint)
            if depth < depth_prev:
                if len(t.motors) < 2:
                    _fail(f"tendons.{t.id}", "crossings must be ordered proximal to distal")
                descending = True
            elif depth > depth_prev and descending:
                _fail(f"tendons.{t.id}",
                      "loop tendon crossings must run out and back exactly once")
            depth_prev = depth
    # spring and geometry slots must exist
    for j in hand.joints:
        if j.spring is not None:
            if j.spring.stiffness_slot not in {s.name for s in hand.layout.stiffness}:
                _fail(f"joints.{j.id}.spring", f"unknown stiffness slot {j.spring.stiffness_slot!r}")
            if j.spring.preload_slot not in {s.name for s in hand.layout.preloads}:
                _fail(f"joints.{j.id}.spring", f"unknown preload slot {j.spring.preload_slot!r}")
        if j.geometry is not None:
            for slot in (j.geometry.radius_slot, j.geometry.height_slot):
                if slot not in {s.name for s in hand.layout.moment_arms}:
                    _fail(f"joints.{j.id}.geometry", f"unknown geometry slot {slot!r}")


def _joint_depth(hand: HandModel, joint_id: str) -> int:
    depth = 0
    link = hand.joint(joint_id).parent_link
    while True:
        parent = hand.link(link).parent_joint
        if parent is None:
            return depth
        depth += 1
        link = hand.joint(parent).parent_link


# ---------------------------------------------------------------------------
# parameter vectors


def validate_params(layout: ParamLayout, values: Mapping[str, float],
                    partial: bool = False, tol: float = 1e-9) -> list[str]:
    """Bound and catalog-membership violations; empty list when valid.

    With ``partial`` only the provided slots are checked, otherwise every
    slot in the layout must be present.
    """
    problems = []
    for s in layout.moment_arms:
        if s.name not in values:
            if not partial:
                problems.append(f"{s.name}: missing")
            continue
        v = values[s.name]
        if not s.lower - tol <= v <= s.upper + tol:
            problems.append(f"{s.name}: {v} outside [{s.lower}, {s.upper}]")
    for s in layout.stiffness:
        if s.name not in values:
            if not partial:
                problems.append(f"{s.name}: missing")
            continue
        v = values[s.name]
        if min(abs(v - c) for c in s.catalog) > tol:
            problems.append(f"{s.name}: {v} not in catalog")
    for s in layout.preloads:
        if s.name not in values:
            if not partial:
                problems.append(f"{s.name}: missing")
            continue
        v = values[s.name]
        if not s.lower - tol <= v <= s.upper + tol:
            problems.append(f"{s.name}: {v} outside [{s.lower}, {s.upper}]")
    unknown = set(values) - layout.slot_names()
    problems += [f"{name}: unknown slot" for name in sorted(unknown)]
    return problems


# ---------------------------------------------------------------------------
# grasp sets


def load_grasp_set(path, hand: HandModel) -> list[GraspRecord]:
    """Load, validate and pair up a grasp set for the given hand.

    One opening-pose record per desired grasp is synthesized when the file
    does not already contain it; loading a fully paired set adds nothing.
    """
    data = _read_json(path, GRASP_SCHEMA)
    raw = data.get("grasps", [])
    if not raw:
        raise ModelError(f"{path}: no grasps")
    limits = hand.dof_limits()
    link_ids = {l.id for l in hand.links}
    grasps: list[GraspRecord] = []
    for i, g in enumerate(raw):
        p = f"grasps[{i}]"
        gid = _require(g, "id", p)
        tag = g.get("tag", "desired")
        if tag not in ("desired", "opening"):
            _fail(p, f"unknown tag {tag!r}")
        theta = [float(v) for v in _require(g, "joint_angles", p)]
        if len(theta) != hand.dof_count:
            _fail(p, f"grasp {gid}: {len(theta)} joint angles for a {hand.dof_count}-DoF hand")
        for d, v in enumerate(theta):
            if not limits[d, 0] - _UNIT_TOL <= v <= limits[d, 1] + _UNIT_TOL:
                _fail(p, f"grasp {gid}: joint angle {d} = {v} outside limits "
                         f"[{limits[d, 0]}, {limits[d, 1]}]")
        contacts = []
        for k, c in enumerate(g.get("contacts", [])):
            cp = f"{p}.contacts[{k}]"
            link = _require(c, "link", cp)
            if link not in link_ids:
                _fail(cp, f"grasp {gid}: unknown link {link!r}")
            normal = _vec3(_require(c, "normal", cp), cp)
            if abs(math.sqrt(sum(v * v for v in normal)) - 1.0) > _UNIT_TOL:
                _fail(cp, f"grasp {gid}: contact normal is not a unit vector")
            mu = float(_require(c, "mu", cp))
            if mu <= 0:
                _fail(cp, f"grasp {gid}: nonpositive friction coefficient")
            contacts.append(
                ContactRecord(link, _vec3(_require(c, "position", cp), cp), normal, mu)
            )
        if tag == "desired" and not contacts:
            _fail(p, f"grasp {gid}: desired grasps need at least one contact")
        if tag == "opening" and contacts:
            _fail(p, f"grasp {gid}: opening poses carry no contacts")
        grasps.append(
            GraspRecord(
                id=gid,
                obj=g.get("object", ""),
                tag=tag,
                pair=g.get("pair", gid),
                joint_angles=tuple(theta),
                contacts=tuple(contacts),
            )
        )
    ids = [g.id for g in grasps]
    if len(set(ids)) != len(ids):
        raise ModelError(f"{path}: duplicate grasp ids")
    opening = hand.opening_pose()
    for g in grasps:
        if g.tag == "opening":
            err = np.max(np.abs(g.theta() - opening))
            if err > 1e-6:
                raise ModelError(
                    f"grasp {g.id}: opening pose differs from the hand's "
                    f"opening-side limits by {err:.2e} rad"
                )
    return pair_opening_poses(grasps, hand)


def pair_opening_poses(grasps: Sequence[GraspRecord], hand: HandModel) -> list[GraspRecord]:
    """Append one opening record per unpaired desired grasp (idempotent)."""
    paired = {g.pair for g in grasps if g.tag == "opening"}
    out = list(grasps)
    opening = tuple(hand.opening_pose().tolist())
    for g in grasps:
        if g.tag == "desired" and g.pair not in paired:
            out.append(
                GraspRecord(
                    id=f"{g.id}.open",
                    obj=g.obj,
                    tag="opening",
                    pair=g.pair,
                    joint_angles=opening,
                    contacts=(),
                )
            )
            paired.add(g.pair)
    return out


def serialize_grasps(grasps: Sequence[GraspRecord], hand_name: str = "") -> dict:
    return {
        "schema": GRASP_SCHEMA,
        "hand": hand_name,
        "grasps": [
            {
                "id": g.id,
                "object": g.obj,
                "tag": g.tag,
                "pair": g.pair,
                "joint_angles": list(g.joint_angles),
                "contacts": [
                    {
                        "link": c.link,
                        "position": list(c.position),
                        "normal": list(c.normal),
                        "mu": c.mu,
                    }
                    for c in g.contacts
                ],
            }
            for g in grasps
        ],
    }
