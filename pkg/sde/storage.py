"""
Flat binary persistence for trajectory batches.

<name>.bin holds a fixed little-endian header followed by the terminal
points and, when stored, the path snapshots as float64. <name>.json is the
sidecar with the config, time grid and exit records.
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from errors import PreconditionError
from logging_config import get_logger
from sde.streams import path_keys
from sde.types import ExitRecords, SimConfig, TrajectoryBatch

logger = get_logger(__name__)

MAGIC = b"MLTB"
FORMAT_VERSION = 1

HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u2"),
        ("has_paths", "<u2"),
        ("n_paths", "<u8"),
        ("n_records", "<u8"),
        ("d", "<u4"),
        ("dt", "<f8"),
        ("seed", "<u8"),
    ]
)


def _nan_to_none(arr: np.ndarray) -> Any:
    return [[None if not np.isfinite(v) else float(v) for v in row] for row in arr]


def _none_to_nan(rows: Any) -> np.ndarray:
    return np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=float)


def persist_batch(batch: TrajectoryBatch, target: Union[str, Path]) -> Dict[str, Path]:
    """
    Write a batch as <target>.bin plus <target>.json.

    Returns:
        Mapping of "data" and "sidecar" to the written paths.
    """
    base = Path(target)
    base.parent.mkdir(parents=True, exist_ok=True)
    data_path = base.with_suffix(".bin")
    sidecar_path = base.with_suffix(".json")

    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["has_paths"] = int(batch.paths is not None)
    header["n_paths"] = batch.n_paths
    header["n_records"] = batch.times.size
    header["d"] = batch.dim
    header["dt"] = batch.config.dt
    header["seed"] = batch.config.master_seed

    with data_path.open("wb") as fh:
        fh.write(header.tobytes())
        fh.write(batch.terminal.astype("<f8").tobytes())
        if batch.paths is not None:
            fh.write(batch.paths.astype("<f8").tobytes())

    sidecar: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "config": batch.config.to_dict(),
        "start": batch.start.tolist(),
        "times": batch.times.tolist(),
        "dead": np.flatnonzero(batch.dead).tolist(),
        "coefficients": batch.coefficients,
        "flags": list(batch.flags),
    }
    if batch.exits is not None:
        sidecar["exits"] = {
            "radii": batch.exits.radii.tolist(),
            "horizon": batch.exits.horizon,
            "tau": _nan_to_none(batch.exits.tau),
            "gamma": _nan_to_none(batch.exits.gamma),
            "gamma_sixteenth": _nan_to_none(batch.exits.gamma_sixteenth),
        }
    sidecar_path.write_text(json.dumps(sidecar, indent=2))

    logger.info(
        "Persisted batch",
        extra={"data": str(data_path), "n_paths": batch.n_paths, "records": int(batch.times.size)},
    )
    return {"data": data_path, "sidecar": sidecar_path}


def load_batch(target: Union[str, Path]) -> TrajectoryBatch:
    """
    Read a batch written by persist_batch.

    Raises:
        PreconditionError: Wrong magic, unknown version or a size mismatch.
    """
    base = Path(target)
    raw = base.with_suffix(".bin").read_bytes()
    sidecar = json.loads(base.with_suffix(".json").read_text())

    header = np.frombuffer(raw[: HEADER.itemsize], dtype=HEADER)[0]
    if bytes(header["magic"]) != MAGIC:
        raise PreconditionError(f"{base}: not a trajectory batch file")
    if int(header["version"]) != FORMAT_VERSION:
        raise PreconditionError(f"{base}: unsupported format version {int(header['version'])}")

    n, m, d = int(header["n_paths"]), int(header["n_records"]), int(header["d"])
    body = np.frombuffer(raw[HEADER.itemsize:], dtype="<f8")
    expected = n * d + (n * m * d if header["has_paths"] else 0)
    if body.size != expected:
        raise PreconditionError(f"{base}: expected {expected} values, found {body.size}")

    terminal = body[: n * d].reshape(n, d).copy()
    paths = body[n * d:].reshape(n, m, d).copy() if header["has_paths"] else None
    dead = np.zeros(n, dtype=bool)
    dead[sidecar["dead"]] = True

    exits = None
    if "exits" in sidecar:
        e = sidecar["exits"]
        exits = ExitRecords(
            radii=np.asarray(e["radii"], dtype=float),
            tau=_none_to_nan(e["tau"]),
            gamma=_none_to_nan(e["gamma"]),
            gamma_sixteenth=_none_to_nan(e["gamma_sixteenth"]),
            horizon=float(e["horizon"]),
        )

    return TrajectoryBatch(
        config=SimConfig(**sidecar["config"]),
        start=np.asarray(sidecar["start"], dtype=float),
        times=np.asarray(sidecar["times"], dtype=float),
        terminal=terminal,
        path_keys=path_keys(n),
        dead=dead,
        paths=paths,
        exits=exits,
        coefficients=sidecar["coefficients"],
        flags=list(sidecar["flags"]),
    )
