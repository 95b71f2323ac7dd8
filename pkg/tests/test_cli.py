import csv
import json
from pathlib import Path

import numpy as np
import pytest

from jostkit.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_schema_error_names_the_path(tmp_path, capsys):
    cfg = {"potential": {"kind": "Free"}, "h_list": "x", "lambdas": {"start": 0.5, "stop": 2.0, "num": 4}}
    code = main(["smatrix", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "config error at h_list" in capsys.readouterr().err


def test_unknown_potential_kind(tmp_path, capsys):
    cfg = {"potential": {"kind": "Nope"}, "h_list": [0.1], "lambdas": {"start": 0.5, "stop": 2.0, "num": 4}}
    assert main(["smatrix", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path / "out")]) == 2
    assert "potential" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["smatrix", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path / "out")]) == 2
    assert "config error" in capsys.readouterr().err


def test_untruncated_tail_is_a_numerical_failure(tmp_path, capsys):
    cfg = {"potential": {"kind": "PowerTail"}, "h_list": [0.1], "lambdas": {"start": 0.5, "stop": 2.0, "num": 4}}
    assert main(["smatrix", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path / "out")]) == 3
    assert "UnsupportedPotential" in capsys.readouterr().err


def test_free_smatrix(tmp_path):
    out = tmp_path / "out"
    assert main(["smatrix", "--config", str(CONFIGS / "smatrix_free.json"), "--out", str(out), "--verify"]) == 0
    rows = read_rows(out / "smatrix.csv")
    assert len(rows) == 32
    for row in rows:
        for key in ("ReS01", "ImS01", "ReS10", "ImS10"):
            assert abs(float(row[key])) < 1e-10
        assert float(row["ReS00"]) == pytest.approx(1.0, abs=1e-10)
        assert float(row["theta"]) == pytest.approx(0.0, abs=1e-10)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "smatrix"
    assert manifest["outputs"] == ["smatrix.csv"]
    assert all(check["passed"] for check in manifest["verify"])
    assert {"config", "version", "numpy", "wall_time_s"} <= set(manifest)


def test_barrier_top_resonances(tmp_path):
    out = tmp_path / "out"
    assert main(["resonances", "--config", str(CONFIGS / "resonances_barrier_top.json"), "--out", str(out)]) == 0
    rows = read_rows(out / "resonances.csv")
    assert len(rows) >= 2
    # E0 - i h mu / 2 with mu = 2
    assert float(rows[0]["Im_z"]) == pytest.approx(-0.05, abs=1e-3)
    assert float(rows[0]["width"]) == pytest.approx(-2 * float(rows[0]["Im_z"]))
    assert rows[0]["kind"] == "Resonance"


def test_homoclinic_overlay(tmp_path):
    cfg = {"potential": {"kind": "DoubleStructure"}, "h": 0.02, "halfwidth": 3.0, "num": 601, "truncation": 6.0}
    out = tmp_path / "out"
    assert main(["homoclinic", "--config", str(write_config(tmp_path, cfg)), "--out", str(out)]) == 0
    rows = read_rows(out / "overlay.csv")
    assert list(rows[0]) == ["lambda", "sigma", "ssf_numerical", "ssf_formula"]
    assert len(rows) == 601
    sigma = np.array([float(r["sigma"]) for r in rows])
    assert sigma[0] == pytest.approx(-3.0) and sigma[-1] == pytest.approx(3.0)
    data = json.loads((out / "homoclinic.json").read_text())
    assert data["g0_minus"] < 0 < data["g_in"]


def test_rerun_is_byte_identical(tmp_path):
    cfg = CONFIGS / "smatrix_barrier.json"
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["smatrix", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["smatrix", "--config", str(cfg), "--out", str(b), "--jobs", "2"]) == 0
    assert (a / "smatrix.csv").read_bytes() == (b / "smatrix.csv").read_bytes()


def test_trapping_class_is_validated_and_echoed(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "smatrix_free.json").read_text())
    out = tmp_path / "out"
    assert main(["smatrix", "--config", str(write_config(tmp_path, cfg)), "--out", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["config"]["trapping"] == "non-trapping"
    cfg["trapping"] = "sticky"
    assert main(["smatrix", "--config", str(write_config(tmp_path, cfg)), "--out", str(out)]) == 2
    assert "config error at trapping" in capsys.readouterr().err


def test_contour_points_reach_the_box(tmp_path):
    cfg = json.loads((CONFIGS / "resonances_barrier_top.json").read_text())
    cfg["box"]["contour_points"] = 512
    out = tmp_path / "out"
    assert main(["resonances", "--config", str(write_config(tmp_path, cfg)), "--out", str(out)]) == 0
    ref = tmp_path / "ref"
    assert main(["resonances", "--config", str(CONFIGS / "resonances_barrier_top.json"), "--out", str(ref)]) == 0
    assert len(read_rows(out / "resonances.csv")) == len(read_rows(ref / "resonances.csv"))
