#!/usr/bin/env python3
"""
Command-line entry point.

    python main.py run <config> [--set key=value ...]
    python main.py sweep <config> --grid <grid file>
    python main.py validate <config>

Exit codes: 0 pass or complete, 1 invalid config, 2 any fail verdict (or a
run that raised), 3 inconclusive.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from dotenv import load_dotenv

# Load environment variables from .env file (must be before other local imports)
load_dotenv()

from errors import ConfigError  # noqa: E402
from experiments.config import load_config, load_grid, parse_value  # noqa: E402
from experiments.runner import execute, sweep, validate  # noqa: E402
from experiments.types import RunManifest, combined_exit_code  # noqa: E402
from logging_config import get_logger, setup_logging  # noqa: E402
from settings import get_settings  # noqa: E402
from worker import WorkerPool  # noqa: E402

setup_logging()
logger = get_logger(__name__)

EXIT_INVALID = 1


def _parse_overrides(items: Sequence[str]) -> dict:
    overrides = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = parse_value(raw.strip())
    return overrides


def _print_manifest(manifest: RunManifest) -> None:
    verdict = manifest.verdict or manifest.status
    line = f"{manifest.kind} {manifest.config_hash[:12]} {verdict}"
    if manifest.error:
        line += f": {manifest.error}"
    print(line)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morreylab", description="Numerical checks for SDEs with Morrey drift.")
    parser.add_argument("--output-dir", type=Path, default=None, help="root directory for run outputs")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (default MORREYLAB_WORKERS)")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    sweep_p = sub.add_parser("sweep", help="run the cartesian product of a parameter grid")
    sweep_p.add_argument("config", type=Path)
    sweep_p.add_argument("--grid", type=Path, required=True)

    validate_p = sub.add_parser("validate", help="check a config without running it")
    validate_p.add_argument("config", type=Path)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    output_dir = args.output_dir or settings.output_dir
    pool = WorkerPool(args.workers)

    try:
        config = load_config(args.config)
        if args.command == "validate":
            error = validate(config)
            if error is not None:
                print(f"{args.config}: {error}")
                return EXIT_INVALID
            print(f"{args.config}: ok ({config.kind.value}, {config.short_hash})")
            return 0

        if args.command == "run":
            overrides = _parse_overrides(args.overrides)
            if overrides:
                config = config.with_overrides(overrides)
            manifest = execute(config, output_dir, pool, overrides).manifest
            _print_manifest(manifest)
            return manifest.exit_code

        manifests = sweep(config, load_grid(args.grid), output_dir, pool)
        for manifest in manifests:
            _print_manifest(manifest)
        return combined_exit_code(manifests)
    except ConfigError as exc:
        logger.error("Invalid configuration", extra={"error": str(exc)})
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
