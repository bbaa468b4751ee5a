"""
Euler-Maruyama simulation of dx = sigma(x) dw + b(x) dt.

The ensemble is simulated chunk by chunk (see sde.streams); chunks go
through the worker pool and are concatenated in chunk order, so the batch is
bit-identical for any worker count.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from fields.coefficients import CoefficientSet
from logging_config import get_logger
from sde.exits import ExitTracker
from sde.streams import ChunkNoise, Stream, chunk_layout, path_keys
from sde.types import ExitRecords, SimConfig, TrajectoryBatch
from worker import WorkerPool

logger = get_logger(__name__)


def drift_increment(coeffs: CoefficientSet, x: np.ndarray, dt: float, taming: bool) -> np.ndarray:
    """b(x) dt, or the tamed b/(1 + dt|b|) dt."""
    b = coeffs.drift(x)
    if taming:
        b = b / (1.0 + dt * np.linalg.norm(b, axis=1))[:, None]
    return b * dt


def euler_step(coeffs: CoefficientSet, x: np.ndarray, dw: np.ndarray, dt: float, taming: bool) -> np.ndarray:
    """One step x + sigma(x) dw + b(x) dt on an (m, d) block."""
    sigma = coeffs.sigma(x)
    return x + np.einsum("nik,nk->ni", sigma, dw) + drift_increment(coeffs, x, dt, taming)


@dataclass
class _ChunkTask:
    coeffs: CoefficientSet
    start: np.ndarray
    config: SimConfig
    chunk: int
    count: int
    radii: np.ndarray


@dataclass
class _ChunkResult:
    terminal: np.ndarray
    dead: np.ndarray
    paths: Optional[np.ndarray]
    tau: np.ndarray
    gamma: np.ndarray
    gamma16: np.ndarray


def _simulate_chunk(task: _ChunkTask) -> _ChunkResult:
    cfg = task.config
    d, d1 = task.coeffs.dim_d, task.coeffs.dim_d1
    noise = ChunkNoise(cfg.master_seed, task.chunk, task.count, d1, Stream.BROWNIAN)

    x = np.tile(task.start, (task.count, 1))
    dead = np.zeros(task.count, dtype=bool)
    frozen = np.zeros(task.count, dtype=bool)
    tracker = ExitTracker(task.radii, np.linalg.norm(x, axis=1))

    record_steps = cfg.record_steps
    paths = np.empty((task.count, record_steps.size, d)) if cfg.store_paths else None
    if paths is not None:
        paths[:, 0] = x
    next_record = 1

    for step in range(1, cfg.n_steps + 1):
        t0 = (step - 1) * cfg.dt
        h = min(cfg.dt, cfg.T - t0)
        dw = noise.draw(h)
        active = ~(dead | frozen)
        r0 = np.linalg.norm(x, axis=1)
        if active.any():
            with np.errstate(over="ignore", invalid="ignore"):
                moved = euler_step(task.coeffs, x[active], dw[active], h, cfg.taming)
            bad = ~np.all(np.isfinite(moved), axis=1)
            moved[bad] = np.nan
            x[active] = moved
            idx = np.flatnonzero(active)
            dead[idx[bad]] = True
        r1 = np.linalg.norm(x, axis=1)
        tracker.update(t0, t0 + h, r0, r1, active & ~dead)
        if cfg.stop_on_exit:
            frozen |= tracker.all_exited()
        if paths is not None and next_record < record_steps.size and record_steps[next_record] == step:
            paths[:, next_record] = x
            next_record += 1

    return _ChunkResult(x, dead, paths, tracker.tau, tracker.gamma, tracker.gamma16)


def _assemble(
    coeffs: CoefficientSet,
    start: np.ndarray,
    config: SimConfig,
    radii: np.ndarray,
    results: List[_ChunkResult],
) -> TrajectoryBatch:
    exits = ExitRecords(
        radii=radii,
        tau=np.concatenate([r.tau for r in results]),
        gamma=np.concatenate([r.gamma for r in results]),
        gamma_sixteenth=np.concatenate([r.gamma16 for r in results]),
        horizon=config.T,
    )
    batch = TrajectoryBatch(
        config=config,
        start=start,
        times=config.times,
        terminal=np.concatenate([r.terminal for r in results]),
        path_keys=path_keys(config.n_paths),
        dead=np.concatenate([r.dead for r in results]),
        paths=np.concatenate([r.paths for r in results]) if config.store_paths else None,
        exits=exits if radii.size else None,
        coefficients=coeffs.name,
    )
    if batch.dead_count:
        batch.flags.append("dead_paths")
    return batch


def euler_maruyama(
    coeffs: CoefficientSet,
    start: Sequence[float],
    config: SimConfig,
    radii: Optional[Sequence[float]] = None,
    pool: Optional[WorkerPool] = None,
) -> TrajectoryBatch:
    """
    Simulate the ensemble started at `start`.

    Args:
        coeffs: Coefficient set; fields are total so every state is evaluable.
        start: Starting point in R^d.
        config: Time step, horizon, path count, seed and storage options.
        radii: Radii whose exit and hitting times are tracked online.
        pool: Worker pool for chunk-parallel simulation.

    Returns:
        The TrajectoryBatch. Paths whose state became non-finite are marked
        dead and flagged, never raised.
    """
    x0 = np.asarray(start, dtype=float).reshape(-1)
    if x0.size != coeffs.dim_d:
        raise ValueError(f"start must have {coeffs.dim_d} components")
    r = np.asarray(radii if radii is not None else [], dtype=float).reshape(-1)

    tasks = [_ChunkTask(coeffs, x0, config, chunk, count, r) for chunk, count in chunk_layout(config.n_paths)]
    pool = pool or WorkerPool(1)
    results = pool.map_ordered(_simulate_chunk, tasks)
    batch = _assemble(coeffs, x0, config, r, results)

    logger.info(
        "Simulated ensemble",
        extra={
            "coefficients": coeffs.name,
            "n_paths": config.n_paths,
            "steps": config.n_steps,
            "dt": config.dt,
            "seed": config.master_seed,
            "dead_paths": batch.dead_count,
            "chunks": len(tasks),
        },
    )
    if batch.dead_count:
        logger.warning("Dead paths excluded from statistics", extra={"dead_paths": batch.dead_count})
    return batch
