import csv
import json

import pytest

from errors import ConfigError
from experiments.config import ExperimentKind, parse_config_text
from experiments.handlers import HANDLER_REGISTRY
from experiments.outputs import PROVENANCE_COLUMNS, format_cell
from experiments.runner import MANIFEST_NAME, expand_grid, run, run_directory, sweep
from experiments.types import RunManifest, RunStatus, combined_exit_code
from main import main
from settings import ARTIFACT_VERSION
from worker import WorkerPool

MORREY = """\
experiment = morrey-norm
field.kind = inverse-radial
field.d = 3
params.q = 2.0
search.nodes = 256
search.depth = 2
search.lattice_cap = 8
search.singular_cap = 2
search.refine_rounds = 1
"""

SIMULATE = """\
experiment = simulate
field.kind = constant
field.d = 3
sim.dt = 0.01
sim.T = 0.5
sim.n_paths = 600
sim.master_seed = 17
check.radii = [0.5, 1.0]
output.plots = false
"""


def _read_csv(path):
    with path.open(newline="") as fh:
        return list(csv.reader(fh))


def test_morrey_run_writes_tables_summary_plot_and_manifest(tmp_path):
    config = parse_config_text(MORREY)
    manifest = run(config, tmp_path)
    out = run_directory(config, tmp_path)
    assert out.name == f"morrey-norm-{config.short_hash}"

    assert manifest.status == RunStatus.COMPLETE
    assert manifest.verdict is None
    assert manifest.exit_code == 0
    assert manifest.outputs == ["morrey.csv", "summary.json", "morrey_witness.svg"]

    rows = _read_csv(out / "morrey.csv")
    assert tuple(rows[0][:3]) == PROVENANCE_COLUMNS
    assert rows[1][0] == config.config_hash
    assert rows[1][2] == ARTIFACT_VERSION
    assert any(row[rows[0].index("witness")] == "true" for row in rows[1:])

    summary = json.loads((out / "summary.json").read_text())
    assert summary["config_hash"] == config.config_hash
    assert summary["experiment"] == "morrey-norm"
    assert summary["verdict"] is None

    on_disk = json.loads((out / MANIFEST_NAME).read_text())
    assert on_disk["config_hash"] == config.config_hash
    assert on_disk["journal"]


def test_invalid_config_gets_a_manifest_and_exit_code_one(tmp_path):
    config = parse_config_text(MORREY.replace("params.q = 2.0", "params.q = 5.0"))
    manifest = run(config, tmp_path)
    assert manifest.status == RunStatus.INVALID
    assert manifest.error_code == "invalid_config"
    assert manifest.exit_code == 1
    assert "line 4" in manifest.error
    assert (run_directory(config, tmp_path) / MANIFEST_NAME).exists()


def test_missing_handler_is_recorded(tmp_path, monkeypatch):
    monkeypatch.delitem(HANDLER_REGISTRY, ExperimentKind.MORREY_NORM)
    manifest = run(parse_config_text(MORREY), tmp_path)
    assert manifest.status == RunStatus.ERROR
    assert manifest.error_code == "NO_HANDLER"
    assert manifest.exit_code == 2


def test_handler_exceptions_become_error_codes(tmp_path, monkeypatch):
    def explode(config, ctx):
        raise ZeroDivisionError("boom")

    monkeypatch.setitem(HANDLER_REGISTRY, ExperimentKind.MORREY_NORM, explode)
    manifest = run(parse_config_text(MORREY), tmp_path)
    assert manifest.status == RunStatus.ERROR
    assert manifest.error_code == "numerical_error"
    assert "boom" in manifest.error


def test_every_kind_has_a_handler():
    assert set(HANDLER_REGISTRY) == set(ExperimentKind)


def test_csv_bodies_do_not_depend_on_worker_count(tmp_path):
    config = parse_config_text(SIMULATE)
    run(config, tmp_path / "serial", WorkerPool(1))
    run(config, tmp_path / "parallel", WorkerPool(2))
    name = run_directory(config, tmp_path).name
    serial = (tmp_path / "serial" / name / "simulate.csv").read_bytes()
    assert serial == (tmp_path / "parallel" / name / "simulate.csv").read_bytes()


def test_plots_are_byte_identical_across_reruns(tmp_path):
    config = parse_config_text(MORREY)
    run(config, tmp_path / "a")
    run(config, tmp_path / "b")
    name = run_directory(config, tmp_path).name
    first = (tmp_path / "a" / name / "morrey_witness.svg").read_bytes()
    assert first == (tmp_path / "b" / name / "morrey_witness.svg").read_bytes()


def test_brownian_exit_table_has_the_reference_column(tmp_path):
    config = parse_config_text(SIMULATE)
    run(config, tmp_path)
    rows = _read_csv(run_directory(config, tmp_path) / "simulate.csv")
    header = rows[0]
    assert rows[1][header.index("seed")] == "17"
    exits = [r for r in rows[1:] if r[header.index("table")] == "exits"]
    refs = [float(r[header.index("brownian_reference")]) for r in exits]
    assert refs == pytest.approx([0.25 / 3.0, 1.0 / 3.0])


def test_expand_grid_deduplicates_by_hash():
    base = parse_config_text(MORREY)
    children = expand_grid(base, {"params.q": [2.0, 2.5, 2.0], "search.depth": [2]})
    assert [c.number("params.q") for _, c in children] == [2.0, 2.5]
    assert children[0][0] == {"params.q": 2.0, "search.depth": 2}


def test_expand_grid_rejects_unknown_sections():
    with pytest.raises(ConfigError):
        expand_grid(parse_config_text(MORREY), {"bogus.key": [1]})
    with pytest.raises(ConfigError):
        expand_grid(parse_config_text(MORREY), {"q": [1]})


def test_sweep_aggregates_child_tables(tmp_path):
    base = parse_config_text(MORREY + "output.plots = false\n")
    manifests = sweep(base, {"params.q": [2.0, 2.5]}, tmp_path)
    assert [m.status for m in manifests] == [RunStatus.COMPLETE] * 2
    assert combined_exit_code(manifests) == 0

    sweep_dirs = list(tmp_path.glob("sweep-*"))
    assert len(sweep_dirs) == 1
    rows = _read_csv(sweep_dirs[0] / "morrey.csv")
    header = rows[0]
    assert header[:4] == ["config_hash", "seed", "artifact_version", "params.q"]
    assert {row[3] for row in rows[1:]} == {format_cell(2.0), format_cell(2.5)}

    listing = json.loads((sweep_dirs[0] / "sweep.json").read_text())
    assert [child["overrides"]["params.q"] for child in listing["children"]] == [2.0, 2.5]
    assert all((tmp_path / child["dir"] / MANIFEST_NAME).exists() for child in listing["children"])


def _manifest(status, verdict=None):
    return RunManifest(config_hash="0" * 64, kind="morrey-norm", artifact_version=ARTIFACT_VERSION, status=status, verdict=verdict)


@pytest.mark.parametrize(
    "manifests, code",
    [
        ([_manifest(RunStatus.COMPLETE, "pass")], 0),
        ([_manifest(RunStatus.COMPLETE, "pass"), _manifest(RunStatus.COMPLETE, "inconclusive")], 3),
        ([_manifest(RunStatus.COMPLETE, "inconclusive"), _manifest(RunStatus.COMPLETE, "fail")], 2),
        ([_manifest(RunStatus.ERROR), _manifest(RunStatus.INVALID)], 1),
        ([], 0),
    ],
)
def test_combined_exit_code(manifests, code):
    assert combined_exit_code(manifests) == code


@pytest.mark.parametrize(
    "value, text",
    [(None, ""), (True, "true"), (0.1, "0.10000000000000001"), (float("nan"), "nan"), ([1, 2], "[1,2]"), (3, "3")],
)
def test_format_cell(value, text):
    assert format_cell(value) == text


def test_cli_validate(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text(MORREY)
    bad = tmp_path / "bad.cfg"
    bad.write_text(MORREY + "params.R0 = -1\n")
    assert main(["validate", str(good)]) == 0
    assert "ok (morrey-norm" in capsys.readouterr().out
    assert main(["validate", str(bad)]) == 1
    assert "params.R0" in capsys.readouterr().out


def test_cli_run_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text(SIMULATE)
    code = main(["--output-dir", str(tmp_path / "runs"), "--workers", "1", "run", str(cfg), "--set", "sim.n_paths=64"])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("simulate ")
    assert line.endswith(" complete")
    manifest = json.loads(next((tmp_path / "runs").glob("simulate-*/manifest.json")).read_text())
    assert manifest["overrides"] == {"sim.n_paths": 64}


def test_cli_reports_unparseable_configs(tmp_path, capsys):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text("experiment = morrey-norm\nthis is not valid\n")
    assert main(["run", str(cfg)]) == 1
    assert "line 2" in capsys.readouterr().err
