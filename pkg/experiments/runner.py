"""
Run and sweep experiments.

A run validates its config, dispatches to the registered handler inside a
LogContext stamped with the config hash, writes the outputs and a
manifest.json, and returns the RunManifest. A sweep runs the cartesian product
of a parameter grid over a base config and concatenates the children's tables
with one column per swept parameter.

Usage:
    from experiments.config import load_config, load_grid
    from experiments.runner import run, sweep

    manifest = run(load_config("configs/exit_stats.cfg"))
    raise SystemExit(manifest.exit_code)
"""

import hashlib
import itertools
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from errors import ConfigError
from experiments.config import SECTIONS, ExperimentConfig, Value, canonical_value, validate_config
from experiments.handlers import RunContext, dispatch_experiment
from experiments.journal import create_run_journal
from experiments.outputs import (
    provenance_for,
    result_tables,
    write_csv,
    write_json,
    write_outputs,
)
from experiments.types import ExperimentResult, RunManifest, RunStatus
from logging_config import LogContext, get_logger
from settings import ARTIFACT_VERSION, get_settings
from worker import WorkerPool, run_job

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class RunOutcome:
    """A manifest together with the in-memory result it describes."""

    config: ExperimentConfig
    manifest: RunManifest
    result: Optional[ExperimentResult] = None
    overrides: Dict[str, Any] = field(default_factory=dict)


def run_directory(config: ExperimentConfig, output_dir: Path) -> Path:
    return output_dir / f"{config.kind.value}-{config.short_hash}"


def validate(config: ExperimentConfig) -> Optional[ConfigError]:
    """The first violated precondition, or None when the config is runnable."""
    try:
        validate_config(config)
    except ConfigError as exc:
        return exc
    return None


def _invalid(config: ExperimentConfig, exc: ConfigError, overrides: Mapping[str, Any]) -> RunManifest:
    logger.warning("Invalid config", extra={"error": str(exc), "config_hash": config.short_hash})
    return RunManifest(
        config_hash=config.config_hash,
        kind=config.kind.value,
        artifact_version=ARTIFACT_VERSION,
        status=RunStatus.INVALID,
        seeds=config.seeds,
        overrides=dict(overrides),
        error=str(exc),
        error_code="invalid_config",
    )


def execute(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    pool: Optional[WorkerPool] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunOutcome:
    """
    Run one experiment and keep its result in memory.

    Invalid configs and handler failures never raise; both are recorded in
    the manifest, which is written in every case.
    """
    settings = get_settings()
    output_dir = Path(output_dir) if output_dir is not None else settings.output_dir
    overrides = dict(overrides or {})
    out_dir = run_directory(config, output_dir)
    started = time.perf_counter()

    with LogContext(config_hash=config.short_hash, experiment=config.kind.value):
        try:
            fields = validate_config(config)
        except ConfigError as exc:
            manifest = _invalid(config, exc, overrides)
            write_json(out_dir / MANIFEST_NAME, manifest.to_dict())
            return RunOutcome(config=config, manifest=manifest, overrides=overrides)

        journal = create_run_journal(settings.environment)
        journal.step("Config validated", data={"experiment": config.kind.value, "config_hash": config.config_hash})
        ctx = RunContext(
            fields=fields,
            pool=pool if pool is not None else WorkerPool(settings.workers),
            journal=journal,
            artifacts_dir=out_dir / "artifacts" if config.flag("output.persist") else None,
        )

        outcome = run_job(config.short_hash, lambda: dispatch_experiment(config, ctx))
        result: Optional[ExperimentResult] = outcome.value if outcome.success else None
        manifest = RunManifest(
            config_hash=config.config_hash,
            kind=config.kind.value,
            artifact_version=ARTIFACT_VERSION,
            status=RunStatus.COMPLETE,
            seeds=config.seeds,
            overrides=overrides,
        )

        if result is None or not result.success:
            manifest.status = RunStatus.ERROR
            manifest.error = outcome.error if result is None else result.error
            manifest.error_code = outcome.error_code if result is None else result.error_code
            journal.error("Experiment failed", data={"error": manifest.error, "error_code": manifest.error_code})
        else:
            plots = settings.plots_enabled and config.flag("output.plots")
            manifest.outputs = write_outputs(result, config, out_dir, plots=plots)
            manifest.outputs.extend(f"artifacts/{name}" for name in ctx.artifacts)
            verdict = result.verdict
            manifest.verdict = verdict.value if verdict else None
            journal.success("Outputs written", data={"files": len(manifest.outputs), "verdict": manifest.verdict})

        manifest.wall_time = round(time.perf_counter() - started, 3)
        manifest.journal = journal.to_dict()
        write_json(out_dir / MANIFEST_NAME, manifest.to_dict())
        logger.info(
            "Run finished",
            extra={"status": manifest.status, "verdict": manifest.verdict, "exit_code": manifest.exit_code, "out_dir": str(out_dir)},
        )
    return RunOutcome(config=config, manifest=manifest, result=result, overrides=overrides)


def run(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    pool: Optional[WorkerPool] = None,
) -> RunManifest:
    """Run one experiment; see `execute`."""
    return execute(config, output_dir, pool).manifest


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _check_grid_keys(grid: Mapping[str, Sequence[Value]]) -> None:
    for key in grid:
        if key == "experiment":
            continue
        section = key.split(".", 1)[0]
        if "." not in key or (section not in SECTIONS and not section.startswith("field")):
            raise ConfigError(f"cannot sweep over {key!r}", key=key)


def expand_grid(base: ExperimentConfig, grid: Mapping[str, Sequence[Value]]) -> List[Tuple[Dict[str, Value], ExperimentConfig]]:
    """
    Children of a sweep in cartesian-product order, deduplicated by hash.

    Raises:
        ConfigError: A grid key outside the known sections.
    """
    _check_grid_keys(grid)
    keys = list(grid)
    children: List[Tuple[Dict[str, Value], ExperimentConfig]] = []
    seen = set()
    for combo in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        child = base.with_overrides(overrides)
        if child.config_hash in seen:
            logger.debug("Skipping duplicate sweep child", extra={"config_hash": child.short_hash})
            continue
        seen.add(child.config_hash)
        children.append((overrides, child))
    return children


def sweep_hash(base: ExperimentConfig, grid: Mapping[str, Sequence[Value]]) -> str:
    text = base.config_hash + "\n" + "\n".join(f"{k}={canonical_value(list(v))}" for k, v in grid.items())
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def aggregate_tables(outcomes: Sequence[RunOutcome], grid_keys: Sequence[str]) -> Dict[str, List[Dict[str, Any]]]:
    """Concatenate child tables, each row led by provenance and parameter columns."""
    tables: Dict[str, List[Dict[str, Any]]] = {}
    for outcome in outcomes:
        if outcome.result is None or outcome.manifest.status != RunStatus.COMPLETE:
            continue
        lead = {**provenance_for(outcome.config), **{key: outcome.overrides.get(key) for key in grid_keys}}
        for name, rows in result_tables(outcome.result).items():
            tables.setdefault(name, []).extend({**lead, **row} for row in rows)
    return tables


def sweep(
    base: ExperimentConfig,
    grid: Mapping[str, Sequence[Value]],
    output_dir: Optional[Path] = None,
    pool: Optional[WorkerPool] = None,
) -> List[RunManifest]:
    """
    Run every grid point over the base config.

    Each child is an ordinary run with its own directory and manifest; the
    sweep directory holds the aggregate CSVs and sweep.json listing the
    children in order.

    Returns:
        The children's manifests in cartesian-product order.
    """
    settings = get_settings()
    output_dir = Path(output_dir) if output_dir is not None else settings.output_dir
    pool = pool if pool is not None else WorkerPool(settings.workers)
    digest = sweep_hash(base, grid)
    sweep_dir = output_dir / f"sweep-{digest[:12]}"
    children = expand_grid(base, grid)
    logger.info("Starting sweep", extra={"children": len(children), "grid_keys": list(grid), "sweep": digest[:12]})

    outcomes: List[RunOutcome] = []
    for overrides, child in children:
        outcomes.append(execute(child, output_dir, pool, overrides))

    provenance = {"sweep_hash": digest, "artifact_version": ARTIFACT_VERSION}
    written = []
    for name, rows in aggregate_tables(outcomes, list(grid)).items():
        if rows:
            written.append(write_csv(sweep_dir / f"{name}.csv", rows, {}).name)
    write_json(
        sweep_dir / "sweep.json",
        {
            **provenance,
            "base_config_hash": base.config_hash,
            "grid": {k: list(v) for k, v in grid.items()},
            "outputs": written,
            "children": [
                {"dir": run_directory(o.config, output_dir).name, **o.manifest.to_dict()}
                for o in outcomes
            ],
        },
    )
    return [o.manifest for o in outcomes]
