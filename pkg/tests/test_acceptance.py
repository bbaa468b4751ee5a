"""Full-scale runs of the shipped configs. Skipped unless pytest is given --runslow."""

import csv
import json
import math
from pathlib import Path

import pytest

from experiments.config import load_config
from experiments.runner import run, run_directory
from worker import WorkerPool

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


def _rows(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _run(name, tmp_path, **overrides):
    config = load_config(CONFIG_DIR / name)
    if overrides:
        config = config.with_overrides(overrides)
    manifest = run(config, tmp_path)
    return config, manifest, run_directory(config, tmp_path)


def test_brownian_exit_time_matches_dynkin(tmp_path):
    _, manifest, out = _run("brownian_exit.cfg", tmp_path)
    assert manifest.exit_code == 0
    exits = [r for r in _rows(out / "simulate.csv") if r["table"] == "exits"]
    assert abs(float(exits[0]["mean_tau"]) - 1.0 / 3.0) <= 0.01


def test_inverse_radial_morrey_norm(tmp_path):
    _, manifest, out = _run("morrey_inverse_radial.cfg", tmp_path)
    assert manifest.exit_code == 0
    witness = [r for r in _rows(out / "morrey.csv") if r["witness"] == "true"]
    value = float(witness[0]["value"])
    assert 1.715 <= value <= 1.750
    assert value == pytest.approx(math.sqrt(3.0), rel=1e-2)


@pytest.mark.parametrize(
    "name",
    ["heat_semigroup.cfg", "chaos_heat.cfg", "counterexample.cfg", "mollifier_bound.cfg", "exit_stats_example.cfg"],
)
def test_shipped_checks_pass(tmp_path, name):
    _, manifest, out = _run(name, tmp_path)
    assert manifest.verdict == "pass", manifest.error
    assert manifest.exit_code == 0
    checks = _rows(out / "checks.csv")
    assert all(r["verdict"] == "pass" for r in checks if r["row"] == "summary")


def test_exit_tables_are_identical_across_worker_counts(tmp_path):
    config = load_config(CONFIG_DIR / "exit_stats_example.cfg").with_overrides({"sim.n_paths": 20000})
    run(config, tmp_path / "one", WorkerPool(1))
    run(config, tmp_path / "four", WorkerPool(4))
    name = run_directory(config, tmp_path).name
    for table in ("checks.csv",):
        assert (tmp_path / "one" / name / table).read_bytes() == (tmp_path / "four" / name / table).read_bytes()


def _summary(out, check):
    rows = [r for r in _rows(out / "checks.csv") if r["row"] == "summary" and r["check"] == check]
    assert len(rows) == 1, check
    return rows[0]


def test_grid_semigroup_agrees_with_feynman_kac(tmp_path):
    _, _, out = _run("cross_method.cfg", tmp_path)
    assert _summary(out, "cross-method")["verdict"] == "pass"
    probes = [r for r in _rows(out / "checks.csv") if r["row"] == "probe" and r["check"] == "cross-method"]
    assert len(probes) == 5


def test_derivative_flow_lower_bound_on_the_mollified_example(tmp_path):
    _, manifest, out = _run("derivative_flow.cfg", tmp_path)
    assert manifest.exit_code == 0
    assert _summary(out, "flow-lower-bound")["verdict"] == "pass"
    probes = [r for r in _rows(out / "checks.csv") if r["row"] == "probe" and r["check"] == "flow-lower-bound"]
    assert len(probes) == 4


CONSTANT_FLOW = """\
experiment = derivative-flow

field.kind = constant
field.d = 3

grid.half_width = 4.0
grid.h = 0.1

sim.dt = 1e-3
sim.T = 0.25
sim.n_paths = 20000
sim.master_seed = 5
sim.start = [0.4, 0.1, 0]

check.n = 8
check.times = [0.1, 0.25]
check.etas = [[1, 0, 0], [0, 1, 0]]
check.width = 0.5
"""


def test_derivative_flow_lower_bound_holds_with_margin_for_constant_sigma(tmp_path):
    path = tmp_path / "constant_flow.cfg"
    path.write_text(CONSTANT_FLOW)
    manifest = run(load_config(path), tmp_path / "runs")
    assert manifest.exit_code == 0
    summary = _summary(run_directory(load_config(path), tmp_path / "runs"), "flow-lower-bound")
    assert summary["verdict"] == "pass"
    assert float(summary["fitted_constant"]) > 0.0


def test_chaos_decay_of_the_example_is_stable_under_refinement(tmp_path):
    _, manifest, out = _run("chaos_example.cfg", tmp_path)
    assert manifest.exit_code == 0
    refinement = _summary(out, "chaos-refinement")
    assert refinement["verdict"] == "pass"
    assert float(refinement["fitted_constant"]) <= 0.15
    summary = json.loads((out / "summary.json").read_text())["summary"]
    assert summary["chaos"]["decay_ratio"] < 1.0
    assert summary["refined"]["decay_ratio"] < 1.0


def test_chaos_tables_are_identical_across_worker_counts(tmp_path):
    config = load_config(CONFIG_DIR / "chaos_example.cfg")
    run(config, tmp_path / "one", WorkerPool(1))
    run(config, tmp_path / "three", WorkerPool(3))
    name = run_directory(config, tmp_path).name
    tables = sorted(p.name for p in (tmp_path / "one" / name).glob("*.csv"))
    assert "checks.csv" in tables
    for table in tables:
        assert (tmp_path / "one" / name / table).read_bytes() == (tmp_path / "three" / name / table).read_bytes()
