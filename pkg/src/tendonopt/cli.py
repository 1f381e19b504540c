"""Command-line front end: validate inputs, run the pipeline, export manifolds.

Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 I/O
failure. All flags are explicit (no environment variables) so a command line
plus its input files fully determines the outputs.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from dataclasses import replace
from pathlib import Path

from .model import (
    DesignConfig,
    ModelError,
    load_config,
    load_grasp_set,
    load_hand_model,
)
from .optimize import (
    DesignReport,
    StageError,
    optimize_inter_tendon,
    optimize_intra_tendon,
    optimize_torque_manifold,
    run_pipeline,
    sample_manifolds,
)
from .report import load_report, load_stage, write_manifolds, write_run
from .solvers import QpError
from . import __version__

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _say(args, message: str):
    if not getattr(args, "quiet", False):
        print(message)


def _load_inputs(args):
    hand = load_hand_model(args.hand)
    grasps = load_grasp_set(args.grasps, hand)
    config = load_config(args.config) if getattr(args, "config", None) else DesignConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    return hand, grasps, config


def cmd_validate(args) -> int:
    diagnostics: list[str] = []
    warnings: list[str] = []
    summary = {}
    try:
        hand = load_hand_model(args.hand)
        summary["hand"] = hand.name
        summary["dof"] = hand.dof_count
        summary["tendons"] = len(hand.tendons)
        summary["motors"] = len(hand.motors)
    except ModelError as exc:
        diagnostics.append(str(exc))
        hand = None
    except OSError as exc:
        diagnostics.append(str(exc))
        hand = None
    if hand is not None:
        try:
            with open(args.grasps, encoding="utf-8") as fh:
                raw_count = len(json.load(fh).get("grasps", []))
            grasps = load_grasp_set(args.grasps, hand)
            desired = [g for g in grasps if g.tag == "desired"]
            summary["desired_grasps"] = len(desired)
            summary["opening_poses"] = len(grasps) - len(desired)
            if len(grasps) > raw_count:
                warnings.append(
                    f"{len(grasps) - raw_count} opening pose(s) were missing "
                    "and will be synthesized"
                )
        except (ModelError, json.JSONDecodeError) as exc:
            diagnostics.append(str(exc))
        except OSError as exc:
            diagnostics.append(str(exc))
    ok = not diagnostics
    print(
        json.dumps(
            {"ok": ok, "diagnostics": diagnostics, "warnings": warnings, "summary": summary},
            sort_keys=True,
        )
    )
    return EXIT_OK if ok else EXIT_VALIDATION


def _copy_inputs(args, out: Path):
    for src, name in ((args.hand, "hand.json"), (args.grasps, "grasps.json")):
        shutil.copyfile(src, out / name)
    if args.config:
        shutil.copyfile(args.config, out / "config.json")


def _assemble_report(hand, config, out: Path) -> DesignReport:
    stages = []
    for k in (1, 2, 3):
        try:
            stages.append(load_stage(out, k))
        except FileNotFoundError:
            break
    return DesignReport(
        hand_name=hand.name,
        design_case=hand.design_case,
        seed=config.seed,
        config_hash=config.hash(),
        version=__version__,
        stages=tuple(stages),
        params={k: v for s in stages for k, v in s.params.items()},
    )


def cmd_optimize(args) -> int:
    try:
        hand, grasps, config = _load_inputs(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _copy_inputs(args, out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.stage == "all":
            report = run_pipeline(hand, grasps, config)
            write_run(out, hand, report)
            for s in report.stages:
                _say(args, f"stage {s.stage}: objective {s.objective:.6g} "
                           f"({s.excluded_count()} grasps excluded)")
            if report.failed_stage is not None:
                print(f"error: stage {report.failed_stage} failed: {report.error}",
                      file=sys.stderr)
                return EXIT_NUMERICAL
        else:
            stage = int(args.stage)
            if stage == 1:
                result = optimize_torque_manifold(hand, grasps, config)
            elif stage == 2:
                try:
                    s1 = load_stage(out, 1)
                except FileNotFoundError:
                    print("error: missing stage-1 artifact (f_trq_min); "
                          "run --stage 1 first", file=sys.stderr)
                    return EXIT_VALIDATION
                result = optimize_inter_tendon(hand, grasps, config, s1)
            else:
                try:
                    s2 = load_stage(out, 2)
                except FileNotFoundError:
                    print("error: missing stage-2 artifact (moment arms); "
                          "run --stage 2 first", file=sys.stderr)
                    return EXIT_VALIDATION
                result = optimize_intra_tendon(hand, grasps, config, s2.params)
            _say(args, f"stage {result.stage}: objective {result.objective:.6g} "
                       f"({result.excluded_count()} grasps excluded)")
            partial = _assemble_report(hand, config, out)
            stages = {s.stage: s for s in partial.stages}
            stages[result.stage] = result
            ordered = tuple(stages[k] for k in sorted(stages))
            report = replace(partial, stages=ordered,
                             params={k: v for s in ordered for k, v in s.params.items()})
            write_run(out, hand, report)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        partial = _assemble_report(hand, config, out)
        write_run(out, hand, replace(partial, failed_stage=None, error=str(exc)))
        return EXIT_NUMERICAL
    except QpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    _say(args, f"wrote {out / 'report.json'}")
    return EXIT_OK


def cmd_sample_manifolds(args) -> int:
    run = Path(args.run)
    try:
        hand = load_hand_model(run / "hand.json")
        grasps = load_grasp_set(run / "grasps.json", hand)
        config = (
            load_config(run / "config.json")
            if (run / "config.json").exists()
            else DesignConfig()
        )
        report = load_report(run)
    except (ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if report.seed != config.seed:
        config = replace(config, seed=report.seed)
    if len(report.stages) < 3:
        print("error: run is incomplete (need stages 1-3 for manifold export)",
              file=sys.stderr)
        return EXIT_VALIDATION
    try:
        samples = sample_manifolds(
            hand, grasps, config, report,
            posture_grid=args.grid if args.grid else None,
        )
        written = write_manifolds(run / "manifolds", samples, report.config_hash)
    except (StageError, QpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        _say(args, f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tendonopt",
        description="Optimize tendon moment arms, spring stiffnesses and preloads "
                    "of an underactuated hand against a set of desired grasps.",
    )
    parser.add_argument("--version", action="version", version=f"tendonopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check hand model and grasp set files")
    p.add_argument("--hand", required=True)
    p.add_argument("--grasps", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("optimize", help="run the design pipeline")
    p.add_argument("--hand", required=True)
    p.add_argument("--grasps", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--stage", choices=["all", "1", "2", "3"], default="all")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sample-manifolds", help="export manifold CSVs for a finished run")
    p.add_argument("--run", required=True, help="output directory of an optimize run")
    p.add_argument("--grid", type=int, default=None, help="posture sweep steps per motor")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sample_manifolds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
