import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from mlbpso import tables
from mlbpso.analysis import summarize_reports
from mlbpso.cli import main
from mlbpso.scenario import Scenario
from mlbpso.sim import KpiReport


@pytest.fixture
def scenario_dir(tmp_path):
    assert main(["gen-scenario", "--sites", "3", "--seed", "1", "--out", str(tmp_path)]) == 0
    return tmp_path


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_gen_scenario_round_trip(scenario_dir, tmp_path):
    sc = Scenario.load(scenario_dir / "scenario.json")
    assert sc.n_cells == 9
    other = tmp_path / "again"
    main(["gen-scenario", "--sites", "3", "--seed", "1", "--out", str(other)])
    assert (other / "scenario.json").read_text() == (scenario_dir / "scenario.json").read_text()


def test_gen_scenario_bad_geometry(tmp_path):
    assert main(["gen-scenario", "--sites", "0", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("controller", [
    {"type": "flat", "hm": 3.0},
    {"type": "disabled"},
    {"type": "dynamic", "surface": "exponential", "params": [30, 30, 6], "period": 5},
    {"type": "static", "surface": "polynomial", "params": [6, -4, 4, 0], "loads": [0.5] * 9},
])
def test_simulate_outputs(scenario_dir, controller):
    cfg = write_json(scenario_dir / "sim.json", {
        "scenario": "scenario.json", "sim": {"arrival_rate": 3, "duration": 60},
        "controller": controller, "seed": 2, "label": "t"})
    out = scenario_dir / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    rep = KpiReport.loads((out / "kpi.json").read_text())
    assert 0 <= rep.p_access <= 1 and len(rep.mean_loads) == 9
    schema, rows = tables.read_table(out / "loads.csv")
    assert schema == tables.LOADS and len(rows) == 9
    schema, rows = tables.read_table(out / "load_histogram.csv")
    assert schema == tables.HISTOGRAM and sum(int(r["count"]) for r in rows) == 9
    for name in ("hm_best_neighbor.csv", "hm_histogram.csv"):
        assert (out / name).exists()
    if controller["type"] == "disabled":
        assert rep.handovers == 0


def test_simulate_seed_override_is_deterministic(scenario_dir):
    cfg = write_json(scenario_dir / "sim.json", {
        "scenario": "scenario.json", "sim": {"arrival_rate": 3, "duration": 40}})
    a, b = scenario_dir / "a", scenario_dir / "b"
    main(["simulate", "--config", cfg, "--seed", "4", "--out", str(a)])
    main(["simulate", "--config", cfg, "--seed", "4", "--out", str(b)])
    assert (a / "kpi.json").read_text() == (b / "kpi.json").read_text()


@pytest.mark.parametrize("bad", [
    {"scenario": "scenario.json", "sim": {"bogus_field": 1}},
    {"scenario": "missing.json"},
    {"scenario": "scenario.json", "controller": {"type": "spline"}},
    {"scenario": "scenario.json", "controller": {"type": "static", "surface": "polynomial",
                                                 "params": [6, 0, 0, 0]}},
])
def test_simulate_configuration_errors(scenario_dir, bad):
    cfg = write_json(scenario_dir / "bad.json", bad)
    assert main(["simulate", "--config", cfg, "--out", str(scenario_dir / "x")]) == 2


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["simulate"]) == 2
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["simulate", "--config", str(tmp_path / "broken.json")]) == 2
    assert main(["front", "--out", str(tmp_path)]) == 2
    assert main(["report", "--out", str(tmp_path)]) == 2


def test_runtime_error_exit_code(scenario_dir):
    cfg = write_json(scenario_dir / "sim.json", {"scenario": "scenario.json",
                                                 "sim": {"duration": 5}})
    blocker = scenario_dir / "file"
    blocker.write_text("")
    # output directory path is an existing file
    assert main(["simulate", "--config", cfg, "--out", str(blocker)]) == 3


def campaign(scenario_dir, name, **extra):
    cfg = {"scenario": "scenario.json", "sim": {"arrival_rate": 3, "duration": 20},
           "population": 4, "iterations": 1, "seed": 1, **extra}
    path = write_json(scenario_dir / f"{name}.json", cfg)
    out = scenario_dir / name
    assert main(["optimize", "--config", path, "--out", str(out)]) == 0
    return out


def test_optimize_and_front(scenario_dir):
    dyn = campaign(scenario_dir, "dyn")
    stat = campaign(scenario_dir, "stat", mode="static_opt", surface="polynomial")
    info = json.loads((dyn / "campaign.json").read_text())
    assert info["evaluations"] == 8 and info["iterated_evaluations"] == 4
    rows = tables.read_archive(dyn / "archive.csv")
    assert rows and all(r["label"] == "exp-dynamic" and len(r["params"]) == 2 for r in rows)
    schema, log_rows = tables.read_table(dyn / "evaluations.csv")
    assert schema == tables.EVAL_LOG and len(log_rows) == 8
    assert (dyn / "archive_history.csv").exists() and (dyn / "baseline_kpi.json").exists()

    out = scenario_dir / "front"
    args = ["front", str(dyn / "archive.csv"), str(stat / "archive.csv"),
            str(dyn / "baseline.csv"), "--out", str(out)]
    assert main(args) == 0
    _, hv = tables.read_table(out / "hypervolume.csv")
    assert [r["label"] for r in hv] == ["exp-dynamic", "poly-static", "planning"]
    assert len({(r["ref_throughput_bps"], r["ref_p_access"]) for r in hv}) == 1
    assert all(float(r["hypervolume"]) > 0 for r in hv)

    # merging a merged front changes nothing
    again = scenario_dir / "front2"
    assert main(["front", str(out / "front.csv"), "--out", str(again)]) == 0
    assert (again / "front.csv").read_text() == (out / "front.csv").read_text()

    assert main(["front", str(dyn / "archive.csv"), "--ref", "1,2,3", "--out", str(out)]) == 2
    assert main(["front", str(dyn / "archive.csv"), "--ref", "1e12,1", "--out", str(out)]) == 2


def test_optimize_bad_config(scenario_dir):
    path = write_json(scenario_dir / "c.json", {"scenario": "scenario.json", "mode": "wat"})
    assert main(["optimize", "--config", path, "--out", str(scenario_dir / "o")]) == 2


def fake_report(p_access, loads):
    return KpiReport(throughput_bps=1e6, p_access=p_access, zero_attempts=False, attempts=10,
                     successes=9, measured_duration=100.0, handovers=10, pingpongs=2,
                     completed_sessions=5, delivered_bits=[0] * len(loads),
                     mean_loads=list(loads))


def test_report_tails_and_pingpong(tmp_path):
    loads = [0.95, 0.05, 0.5, 0.92]
    paths = []
    for j in range(3):
        p = tmp_path / f"k{j}.json"
        p.write_text(fake_report(0.9, loads).dumps())
        paths.append(str(p))
    out = tmp_path / "rep"
    assert main(["report", *paths, "--label", "x", "--out", str(out)]) == 0
    _, rows = tables.read_table(out / "summary.csv")
    vals = {r["metric"]: r["value"] for r in rows}
    assert vals["cells_load_above_high"] == "2" and vals["cells_load_below_low"] == "1"
    assert float(vals["pingpong_rate"]) == pytest.approx(0.2)
    assert float(vals["p_access_ci_width"]) == 0.0


def test_confidence_interval_scales_with_sqrt_n():
    pattern = [0.90, 0.94, 0.92, 0.96]
    widths = {}
    for n in (4, 16):
        vals = (pattern * (n // 4))[:n]
        s = summarize_reports([fake_report(v, [0.5]) for v in vals])
        assert s["p_access_ci_width"] == pytest.approx(
            2 * 1.96 * np.std(vals, ddof=1) / math.sqrt(n), rel=1e-12)
        widths[n] = s["p_access_ci_width"]
    # same spread, four times the samples: about half the width
    assert widths[4] / widths[16] == pytest.approx(2.0, rel=0.15)


@pytest.mark.skipif(shutil.which("mlbpso") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["mlbpso", "gen-scenario", "--sites", "1", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and (tmp_path / "scenario.json").exists()
    proc = subprocess.run(["mlbpso", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
