import hashlib
import json
from pathlib import Path

import pytest

from fixture_gen import FIXTURES, gen2f_grasps, load_fixture_hand
from tendonopt.cli import main
from tendonopt.model import serialize_grasps

SMALL_CONFIG = {
    "schema": "design-config/1",
    "seed": 13,
    "stage_ftol": [1e-5, 1e-4, 1e-6],
    "max_evals": [900, 700, 500],
    "stage3_restarts": 1,
    "posture_grid": 15,
    "torque_grid_points": 150,
}


@pytest.fixture(scope="module")
def run_inputs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    hand = load_fixture_hand("gen2f")
    grasps = gen2f_grasps(hand)
    gpath = tmp / "grasps.json"
    gpath.write_text(json.dumps(serialize_grasps(grasps, "gen2f")))
    cpath = tmp / "config.json"
    cpath.write_text(json.dumps(SMALL_CONFIG))
    return str(FIXTURES / "gen2f.json"), str(gpath), str(cpath), tmp


def _dir_digest(path: Path) -> dict[str, str]:
    out = {}
    for p in sorted(path.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(path))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def test_validate_ok(run_inputs, capsys):
    hand, grasps, _, _ = run_inputs
    assert main(["validate", "--hand", hand, "--grasps", grasps]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["ok"] is True
    assert payload["summary"]["desired_grasps"] == 12
    assert payload["warnings"] == []  # the set is fully paired


def test_validate_reports_bad_friction(run_inputs, tmp_path, capsys):
    hand, grasps, _, _ = run_inputs
    doc = json.loads(Path(grasps).read_text())
    doc["grasps"][0]["contacts"][0]["mu"] = -1.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--hand", hand, "--grasps", str(bad)]) == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["ok"] is False
    assert any("friction" in d for d in payload["diagnostics"])


def test_validate_notes_missing_opening_pairs(run_inputs, tmp_path, capsys):
    hand, grasps, _, _ = run_inputs
    doc = json.loads(Path(grasps).read_text())
    doc["grasps"] = [g for g in doc["grasps"] if g["tag"] == "desired"]
    stripped = tmp_path / "stripped.json"
    stripped.write_text(json.dumps(doc))
    assert main(["validate", "--hand", hand, "--grasps", str(stripped)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["warnings"]


@pytest.fixture(scope="module")
def full_run(run_inputs):
    hand, grasps, config, tmp = run_inputs
    out = tmp / "full"
    assert main(["optimize", "--hand", hand, "--grasps", grasps,
                 "--config", config, "--out", str(out), "--quiet"]) == 0
    return out


def test_full_run_writes_report_and_metrics(full_run):
    out = full_run
    report = json.loads((out / "report.json").read_text())
    assert len(report["stages"]) == 3
    assert report["config_hash"]
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0].startswith("# schema=")
    assert len(metrics) == 5  # comment, header, 3 stage rows
    params = (out / "parameters.csv").read_text()
    for slot in ("r_a1", "K_a1", "th0_a"):
        assert slot in params
    for artifact in ("stage1.json", "stage2.json", "stage3.json",
                     "hand.json", "grasps.json", "config.json"):
        assert (out / artifact).exists()


def test_stagewise_run_requires_prior_artifacts(run_inputs, capsys):
    hand, grasps, config, tmp = run_inputs
    out = tmp / "staged"
    assert main(["optimize", "--hand", hand, "--grasps", grasps, "--config", config,
                 "--out", str(out), "--stage", "2", "--quiet"]) == 1
    assert "missing" in capsys.readouterr().err
    assert main(["optimize", "--hand", hand, "--grasps", grasps, "--config", config,
                 "--out", str(out), "--stage", "1", "--quiet"]) == 0
    assert main(["optimize", "--hand", hand, "--grasps", grasps, "--config", config,
                 "--out", str(out), "--stage", "2", "--quiet"]) == 0
    assert main(["optimize", "--hand", hand, "--grasps", grasps, "--config", config,
                 "--out", str(out), "--stage", "3", "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert [s["stage"] for s in report["stages"]] == [1, 2, 3]


def test_stagewise_matches_full_run(run_inputs, full_run):
    hand, grasps, config, tmp = run_inputs
    full = json.loads((full_run / "report.json").read_text())
    staged = json.loads((tmp / "staged" / "report.json").read_text())
    assert staged["params"] == full["params"]
    for a, b in zip(staged["stages"], full["stages"]):
        assert a["objective"] == b["objective"]


def test_seed_override_changes_hash_and_outputs(run_inputs, full_run):
    hand, grasps, config, tmp = run_inputs
    out = tmp / "seeded"
    assert main(["optimize", "--hand", hand, "--grasps", grasps, "--config", config,
                 "--out", str(out), "--seed", "99", "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 99
    base = json.loads((full_run / "report.json").read_text())
    assert report["config_hash"] != base["config_hash"]


def test_manifold_export_files_and_flags(full_run):
    out = full_run
    assert main(["sample-manifolds", "--run", str(out), "--grid", "10", "--quiet"]) == 0
    files = sorted(p.name for p in (out / "manifolds").glob("*.csv"))
    assert files == ["cha_posture.csv", "cha_torque.csv",
                     "chb_posture.csv", "chb_torque.csv"]
    body = (out / "manifolds" / "cha_torque.csv").read_text().splitlines()
    assert body[0].startswith("# schema=manifold-csv/1")
    assert body[1] == "kind,c1,c2,c3,excluded,grasp_id"
    kinds = {line.split(",")[0] for line in body[2:]}
    assert {"manifold", "grasp", "pca_origin", "pca_axis"} <= kinds
    grasp_rows = [l for l in body if l.startswith("grasp,")]
    assert len(grasp_rows) == 12
    assert all(row.split(",")[4] in ("0", "1") for row in grasp_rows)


def test_sample_manifolds_requires_complete_run(run_inputs, tmp_path, capsys):
    assert main(["sample-manifolds", "--run", str(tmp_path)]) in (1, 3)


def test_byte_identical_reruns(run_inputs):
    hand, grasps, config, tmp = run_inputs
    digests = []
    for name in ("rep1", "rep2"):
        out = tmp / name
        assert main(["optimize", "--hand", hand, "--grasps", grasps,
                     "--config", config, "--out", str(out), "--quiet"]) == 0
        assert main(["sample-manifolds", "--run", str(out), "--grid", "8",
                     "--quiet"]) == 0
        digests.append(_dir_digest(out))
    assert digests[0] == digests[1]
