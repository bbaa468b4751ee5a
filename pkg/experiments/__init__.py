"""
Experiment harness: config files, the handler registry, runs and sweeps.

Usage:
    from experiments import load_config, run

    config = load_config("configs/morrey_inverse_radial.cfg")
    manifest = run(config)
    print(manifest.verdict, manifest.outputs)
"""

from experiments.config import (
    ExperimentConfig,
    ExperimentKind,
    load_config,
    load_grid,
    parse_config_text,
    validate_config,
)
from experiments.handlers import HANDLER_REGISTRY, RunContext, dispatch_experiment
from experiments.journal import JournalLevel, RunJournal, create_run_journal
from experiments.outputs import SUMMARY_SCHEMA_VERSION, write_outputs
from experiments.runner import execute, expand_grid, run, sweep, validate
from experiments.types import (
    ExperimentResult,
    PlotSpec,
    RunManifest,
    RunStatus,
    Series,
    combined_exit_code,
)

__all__ = [
    # Config
    "ExperimentConfig",
    "ExperimentKind",
    "load_config",
    "load_grid",
    "parse_config_text",
    "validate_config",
    # Handlers
    "HANDLER_REGISTRY",
    "RunContext",
    "dispatch_experiment",
    # Journal
    "JournalLevel",
    "RunJournal",
    "create_run_journal",
    # Results and outputs
    "ExperimentResult",
    "PlotSpec",
    "Series",
    "RunManifest",
    "RunStatus",
    "combined_exit_code",
    "SUMMARY_SCHEMA_VERSION",
    "write_outputs",
    # Runs
    "run",
    "execute",
    "sweep",
    "expand_grid",
    "validate",
]
