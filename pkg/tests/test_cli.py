import csv
import io
import json
import subprocess
import sys

import pytest
import yaml

from noma_aoii.cli import main
from noma_aoii.config import load_config
from noma_aoii.pipeline import analytic_metrics, optimize

from .conftest import DEFAULT_CONFIG


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, **queue):
    data = yaml.safe_load(DEFAULT_CONFIG.read_text())
    data["queue"].update(queue)
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def test_analytic_json_round_trip(capsys):
    code, out, _ = run_cli(capsys, "analytic", DEFAULT_CONFIG)
    assert code == 0
    data = json.loads(out)
    _, expected = analytic_metrics(load_config(DEFAULT_CONFIG))
    assert data == expected
    assert max(data["rho0"], data["rho1"], data["rho2"]) < 1
    for key in ("eta0", "eta1", "eta2", "d0", "d1", "d2", "aoi_cat1", "aoi_cat2", "aoi_blended", "xi_6", "aoii"):
        assert key in data


def test_analytic_csv_and_out(capsys, tmp_path):
    out_path = tmp_path / "a.csv"
    code, out, _ = run_cli(capsys, "--format", "csv", "analytic", DEFAULT_CONFIG, "--out", out_path)
    assert code == 0
    assert out_path.read_text() == out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0] == {"metric": "arrival_mode", "value": "departure"}


def test_unstable_config_exits_3(capsys, tmp_path):
    code, out, err = run_cli(capsys, "analytic", write_config(tmp_path, lambda0=25.0))
    assert code == 3 and out == ""
    assert "C5" in err


def test_bad_config_exits_2(capsys, tmp_path):
    code, _, err = run_cli(capsys, "analytic", write_config(tmp_path, a=3.0))
    assert code == 2 and "configuration" in err
    code, _, _ = run_cli(capsys, "analytic", tmp_path / "missing.yaml")
    assert code == 2


def test_simulate_is_deterministic(capsys, tmp_path):
    paths = []
    for k in range(2):
        out = tmp_path / f"sim{k}.json"
        trace = tmp_path / f"trace{k}.csv"
        code, _, _ = run_cli(capsys, "simulate", DEFAULT_CONFIG, "--seed", 42, "--packets", 20000, "--out", out,
                             "--trace", trace)
        assert code == 0
        paths.append((out.read_bytes(), trace.read_bytes()))
    assert paths[0] == paths[1]


def test_simulate_comparison_table(capsys):
    code, out, _ = run_cli(capsys, "simulate", DEFAULT_CONFIG, "--packets", 1_000_000, "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["metric", "analytic_departure_mode", "analytic_flow_mode", "simulated", "rel_err"]
    assert [r["metric"] for r in rows] == ["d0", "d1", "d2", "aoi_cat1", "aoi_cat2", "aoi_blended", "aoii"]
    d0 = rows[0]
    assert abs(float(d0["simulated"]) - 0.06275) / 0.06275 < 0.01
    assert abs(float(d0["rel_err"])) < 0.01


def test_simulate_unstable_exits_3(capsys, tmp_path):
    code, _, err = run_cli(capsys, "simulate", write_config(tmp_path, mu2=4.0), "--packets", 1000)
    assert code == 3 and "C5" in err


def test_optimize_output(capsys):
    code, out, _ = run_cli(capsys, "optimize", DEFAULT_CONFIG)
    assert code == 0
    data = json.loads(out)
    assert len(data["trace"]) == 101
    assert [row["best"] for row in data["trace"]].count(True) == 1
    assert data["trace"][data["best_index"]]["best"]
    assert data["aoii_min"] == data["aoi_min"] * (1 - data["mean_similarity"])
    assert data["aoi_min"] == optimize(load_config(DEFAULT_CONFIG)).aoi_min


def test_sweep_outputs(capsys, tmp_path):
    exp = tmp_path / "exp.yaml"
    exp.write_text(yaml.safe_dump({
        "name": "mini", "base": str(DEFAULT_CONFIG),
        "sweep": [{"path": "queue.mu2", "values": [9.0, 10.0]}], "outputs": ["d2", "aoii"],
    }))
    code, out, _ = run_cli(capsys, "sweep", exp)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "experiment,param1,value1,param2,value2,metric,value,reason"
    assert len(lines) == 1 + 4
    code, again, _ = run_cli(capsys, "sweep", exp)
    assert again == out
    exp.write_text(yaml.safe_dump({
        "name": "mini", "base": str(DEFAULT_CONFIG),
        "sweep": [{"path": "queue.mu2", "values": []}], "outputs": ["d2"],
    }))
    code, _, _ = run_cli(capsys, "sweep", exp)
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "noma_aoii", "analytic", str(DEFAULT_CONFIG)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["aoi_blended"] == pytest.approx(0.38921968142447728, rel=1e-12)
