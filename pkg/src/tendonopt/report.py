"""Serialization of pipeline results: report JSON, metrics/parameter CSV,
stage artifacts and manifold sample CSVs.

Every emitted file carries the config hash; rerunning with unchanged inputs
and seed reproduces the files byte for byte (no timestamps).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import HandModel
from .optimize.manifolds import ManifoldSamples
from .optimize.results import DesignReport, StageResult

REPORT_SCHEMA = "design-report/1"
MANIFOLD_SCHEMA = "manifold-csv/1"

STAGE_TITLES = {
    1: "torque manifold",
    2: "posture manifold (inter-tendon)",
    3: "posture manifold (intra-tendon)",
}

STAGE_UNITS = {1: "unitless torque", 2: "mm", 3: "Nmm"}


def stage_to_dict(s: StageResult) -> dict:
    return {
        "stage": s.stage,
        "title": STAGE_TITLES[s.stage],
        "unit": STAGE_UNITS[s.stage],
        "params": dict(sorted(s.params.items())),
        "objective": s.objective,
        "per_grasp": dict(sorted(s.per_grasp.items())),
        "excluded": dict(sorted(s.excluded.items())),
        "infeasible": list(s.infeasible),
        "f_trq_min": s.f_trq_min,
        "evaluations": s.evaluations,
        "seed": s.seed,
        "converged": s.converged,
        "notes": list(s.notes),
        "iteration_objectives": list(s.iteration_objectives),
    }


def stage_from_dict(d: dict) -> StageResult:
    return StageResult(
        stage=d["stage"],
        params=dict(d["params"]),
        per_grasp=dict(d["per_grasp"]),
        excluded={k: int(v) for k, v in d["excluded"].items()},
        objective=d["objective"],
        evaluations=d["evaluations"],
        seed=d["seed"],
        converged=d["converged"],
        infeasible=tuple(d.get("infeasible", ())),
        f_trq_min=d.get("f_trq_min"),
        notes=tuple(d.get("notes", ())),
        iteration_objectives=tuple(d.get("iteration_objectives", ())),
    )


def report_to_dict(r: DesignReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "hand": r.hand_name,
        "design_case": r.design_case,
        "seed": r.seed,
        "config_hash": r.config_hash,
        "version": r.version,
        "params": dict(sorted(r.params.items())),
        "stages": [stage_to_dict(s) for s in r.stages],
        "failed_stage": r.failed_stage,
        "error": r.error,
    }


def report_from_dict(d: dict) -> DesignReport:
    if d.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unexpected report schema {d.get('schema')!r}")
    return DesignReport(
        hand_name=d["hand"],
        design_case=d["design_case"],
        seed=d["seed"],
        config_hash=d["config_hash"],
        version=d["version"],
        stages=tuple(stage_from_dict(s) for s in d["stages"]),
        params=dict(d["params"]),
        failed_stage=d.get("failed_stage"),
        error=d.get("error"),
    )


def _dump_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def metrics_csv(r: DesignReport) -> str:
    lines = [f"# schema={REPORT_SCHEMA} config_hash={r.config_hash}"]
    lines.append("stage,title,objective,unit,excluded_grasps,evaluations,converged")
    for s in r.stages:
        lines.append(
            f"{s.stage},{STAGE_TITLES[s.stage]},{s.objective:.9g},{STAGE_UNITS[s.stage]},"
            f"{s.excluded_count()},{s.evaluations},{int(s.converged)}"
        )
    return "\n".join(lines) + "\n"


def parameters_csv(hand: HandModel, r: DesignReport) -> str:
    lines = [f"# schema={REPORT_SCHEMA} config_hash={r.config_hash}"]
    lines.append("slot,kind,value,unit")
    layout = hand.layout
    for s in layout.moment_arms:
        if s.name in r.params:
            lines.append(f"{s.name},moment_arm,{r.params[s.name]:.9g},mm")
    for s in layout.stiffness:
        if s.name in r.params:
            lines.append(f"{s.name},stiffness,{r.params[s.name]:.9g},{s.unit}")
    for s in layout.preloads:
        if s.name in r.params:
            lines.append(f"{s.name},preload,{r.params[s.name]:.9g},{s.unit}")
    return "\n".join(lines) + "\n"


def write_run(out_dir, hand: HandModel, report: DesignReport):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "report.json", report_to_dict(report))
    for s in report.stages:
        payload = stage_to_dict(s)
        payload["schema"] = REPORT_SCHEMA
        payload["config_hash"] = report.config_hash
        _dump_json(out / f"stage{s.stage}.json", payload)
    (out / "metrics.csv").write_text(metrics_csv(report), encoding="utf-8")
    (out / "parameters.csv").write_text(parameters_csv(hand, report), encoding="utf-8")


def load_report(out_dir) -> DesignReport:
    path = Path(out_dir) / "report.json"
    return report_from_dict(json.loads(path.read_text(encoding="utf-8")))


def load_stage(out_dir, stage: int) -> StageResult:
    path = Path(out_dir) / f"stage{stage}.json"
    if not path.exists():
        raise FileNotFoundError(path)
    return stage_from_dict(json.loads(path.read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# manifold CSV export (schema manifold-csv/1, see docs/formats.md)


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def manifold_csv(samples: ManifoldSamples, config_hash: str) -> str:
    dim = samples.dim
    header = ["kind"] + [f"c{i + 1}" for i in range(3)] + ["excluded", "grasp_id"]
    lines = [
        f"# schema={MANIFOLD_SCHEMA} config_hash={config_hash} "
        f"space={samples.space} chain={samples.chain} dim={dim} "
        f"labels={'|'.join(samples.dof_labels)}"
    ]
    lines.append(",".join(header))

    def coords(vec) -> list[str]:
        vals = [_fmt(float(v)) for v in vec]
        return vals + [""] * (3 - dim)

    for p in np.atleast_2d(samples.points):
        lines.append(",".join(["manifold"] + coords(p) + ["", ""]))
    for gp in samples.grasp_points:
        lines.append(
            ",".join(["grasp"] + coords(gp.coords) + [str(int(gp.excluded)), gp.grasp_id])
        )
    lines.append(",".join(["pca_origin"] + coords(samples.pca_origin) + ["", ""]))
    for axis in np.atleast_2d(samples.pca_axes) if samples.pca_axes.size else []:
        lines.append(",".join(["pca_axis"] + coords(axis) + ["", ""]))
    return "\n".join(lines) + "\n"


def write_manifolds(out_dir, samples: Sequence[ManifoldSamples], config_hash: str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for s in samples:
        path = out / f"{s.chain}_{s.space}.csv"
        path.write_text(manifold_csv(s, config_hash), encoding="utf-8")
        written.append(path)
    return written
