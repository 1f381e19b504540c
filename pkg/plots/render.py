#!/usr/bin/env python3
"""Render tendonopt manifold CSV exports into static figures.

Usage:
    python render.py --in <run or csv dir> --out <figure dir> [--format svg]

Consumes only the documented ``manifold-csv/1`` schema (plus ``metrics.csv``
when present) and never modifies its inputs. Each chain/space CSV becomes
one figure: the realizable manifold in blue, the affine PCA fit of the
considered grasp points in orange, considered grasps as red dots and
excluded grasps as gray dots. Two-DoF chains render in 2D, three-DoF chains
in 3D. A run's metrics.csv additionally becomes a one-image summary table.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MANIFOLD_SCHEMA = "manifold-csv/1"
EXPECTED_HEADER = ["kind", "c1", "c2", "c3", "excluded", "grasp_id"]


class RenderError(RuntimeError):
    pass


@dataclass
class ManifoldData:
    space: str
    chain: str
    dim: int
    labels: list[str]
    manifold: np.ndarray
    grasp_points: np.ndarray
    grasp_excluded: np.ndarray
    grasp_ids: list[str]
    pca_origin: np.ndarray | None = None
    pca_axes: list[np.ndarray] = field(default_factory=list)


@dataclass
class PlotSpec:
    csv_path: Path
    out_path: Path


def _parse_meta(line: str) -> dict:
    if not line.startswith("#"):
        raise RenderError("missing schema comment line")
    meta = {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, value = token.split("=", 1)
            meta[key] = value
    if meta.get("schema") != MANIFOLD_SCHEMA:
        raise RenderError(f"unexpected schema {meta.get('schema')!r}")
    return meta


def load_manifold_csv(path: Path) -> ManifoldData:
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        meta = _parse_meta(first)
        reader = csv.reader(fh)
        header = next(reader)
        if header != EXPECTED_HEADER:
            raise RenderError(f"{path.name}: unexpected columns {header}")
        dim = int(meta.get("dim", 3))
        manifold, gpts, gexc, gids, axes = [], [], [], [], []
        origin = None
        for row in reader:
            kind = row[0]
            coords = [float(v) for v in row[1 : 1 + dim]]
            if kind == "manifold":
                manifold.append(coords)
            elif kind == "grasp":
                gpts.append(coords)
                gexc.append(row[4] == "1")
                gids.append(row[5])
            elif kind == "pca_origin":
                origin = np.array(coords)
            elif kind == "pca_axis":
                axes.append(np.array(coords))
            else:
                raise RenderError(f"{path.name}: unknown row kind {kind!r}")
    return ManifoldData(
        space=meta.get("space", "?"),
        chain=meta.get("chain", "?"),
        dim=dim,
        labels=meta.get("labels", "").split("|"),
        manifold=np.array(manifold) if manifold else np.zeros((0, dim)),
        grasp_points=np.array(gpts) if gpts else np.zeros((0, dim)),
        grasp_excluded=np.array(gexc, dtype=bool),
        grasp_ids=gids,
        pca_origin=origin,
        pca_axes=axes,
    )


def _extent(data: ManifoldData) -> float:
    pts = [p for p in (data.manifold, data.grasp_points) if p.size]
    if not pts:
        return 1.0
    stacked = np.vstack(pts)
    return max(float(np.max(np.linalg.norm(stacked - stacked.mean(axis=0), axis=1))), 1e-6)


def _pca_line(data: ManifoldData, axis: np.ndarray) -> np.ndarray:
    half = 1.1 * _extent(data)
    ts = np.linspace(-half, half, 2)
    return data.pca_origin[None, :] + ts[:, None] * axis[None, :]


def render_manifold(spec: PlotSpec) -> Path:
    data = load_manifold_csv(spec.csv_path)
    unit = "normalized torque" if data.space == "torque" else "rad"
    fig = plt.figure(figsize=(5.0, 4.2))
    if data.dim == 3:
        ax = fig.add_subplot(projection="3d")
    else:
        ax = fig.add_subplot()
    if data.manifold.size:
        if data.dim == 3:
            ax.scatter(*data.manifold.T, s=3, c="tab:blue", alpha=0.35,
                       label="realizable manifold", depthshade=False)
        else:
            ax.scatter(*data.manifold.T, s=3, c="tab:blue", alpha=0.5,
                       label="realizable manifold")
    if data.pca_origin is not None and data.pca_axes:
        if data.dim == 3 and len(data.pca_axes) >= 2:
            half = 1.1 * _extent(data)
            u = np.linspace(-half, half, 8)
            uu, vv = np.meshgrid(u, u)
            plane = (data.pca_origin[None, None, :]
                     + uu[..., None] * data.pca_axes[0][None, None, :]
                     + vv[..., None] * data.pca_axes[1][None, None, :])
            ax.plot_surface(plane[..., 0], plane[..., 1], plane[..., 2],
                            color="tab:orange", alpha=0.25, linewidth=0)
            ax.plot([], [], color="tab:orange", label="PCA fit")
        else:
            line = _pca_line(data, data.pca_axes[0])
            ax.plot(*line.T, color="tab:orange", lw=1.8, label="PCA fit")
    kept = data.grasp_points[~data.grasp_excluded] if data.grasp_points.size else np.zeros((0, data.dim))
    dropped = data.grasp_points[data.grasp_excluded] if data.grasp_points.size else np.zeros((0, data.dim))
    if kept.size:
        ax.scatter(*kept.T, s=28, c="tab:red", label="considered grasps")
    if dropped.size:
        ax.scatter(*dropped.T, s=28, c="gray", label="excluded grasps")
    labels = data.labels + [""] * 3
    ax.set_xlabel(f"{labels[0]} [{unit}]")
    ax.set_ylabel(f"{labels[1]} [{unit}]")
    if data.dim == 3:
        ax.set_zlabel(f"{labels[2]} [{unit}]")
    ax.set_title(f"{data.chain} {data.space} manifold")
    ax.legend(loc="best", fontsize=7)
    fig.tight_layout()
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path)
    plt.close(fig)
    return spec.out_path


def render_metrics_table(metrics_csv: Path, out_path: Path) -> Path:
    with open(metrics_csv, newline="", encoding="utf-8") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    cells = [
        [r[1], f"{float(r[2]):.4g} {r[3]}", f"({r[4]} grasps excluded)"]
        for r in body
    ]
    fig, ax = plt.subplots(figsize=(6.4, 0.6 + 0.5 * len(cells)))
    ax.axis("off")
    table = ax.table(
        cellText=cells,
        colLabels=["optimization of", "objective", "exclusions"],
        loc="center",
    )
    table.scale(1.0, 1.4)
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def find_inputs(in_dir: Path) -> tuple[list[Path], Path | None]:
    manifold_dir = in_dir / "manifolds" if (in_dir / "manifolds").is_dir() else in_dir
    csvs = sorted(p for p in manifold_dir.glob("*.csv"))
    manifold_csvs = []
    for p in csvs:
        with open(p, encoding="utf-8") as fh:
            if fh.readline().startswith(f"# schema={MANIFOLD_SCHEMA}"):
                manifold_csvs.append(p)
    metrics = in_dir / "metrics.csv"
    return manifold_csvs, metrics if metrics.is_file() else None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="run directory or directory of manifold CSVs")
    parser.add_argument("--out", dest="out_dir", required=True)
    parser.add_argument("--format", default="svg", choices=["svg", "pdf", "png"])
    args = parser.parse_args(argv)
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    try:
        manifold_csvs, metrics = find_inputs(in_dir)
        if not manifold_csvs:
            raise RenderError(f"no {MANIFOLD_SCHEMA} files under {in_dir}")
        written = []
        for path in manifold_csvs:
            out = out_dir / f"{path.stem}.{args.format}"
            written.append(render_manifold(PlotSpec(csv_path=path, out_path=out)))
        if metrics is not None:
            written.append(render_metrics_table(metrics, out_dir / f"metrics.{args.format}"))
    except (RenderError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
