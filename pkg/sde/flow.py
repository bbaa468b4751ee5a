"""
The derivative flow of the Euler scheme.

Alongside x the scheme carries eta with

    d eta = (D sigma^k eta) dw^k + (D b eta) dt
            + K0(x) dB^(0) + K0(x) eta^k dB^(k),

where B^(0), ..., B^(d) are d-dimensional Wiener processes independent of w.
The equation is affine in eta, so several initial vectors are advanced on
one shared noise realisation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from fields.base import ConstantField, Field
from fields.coefficients import CoefficientSet
from logging_config import get_logger
from sde.euler import euler_step
from sde.streams import ChunkNoise, Stream, chunk_layout, path_keys
from sde.types import DerivativeFlowBatch, SimConfig
from worker import WorkerPool

logger = get_logger(__name__)


@dataclass
class _FlowTask:
    coeffs: CoefficientSet
    k0: Field
    start: np.ndarray
    etas: np.ndarray  # (m, d)
    config: SimConfig
    chunk: int
    count: int


@dataclass
class _FlowResult:
    terminal: np.ndarray
    eta_terminal: np.ndarray
    dead: np.ndarray
    paths: Optional[np.ndarray]
    eta_paths: Optional[np.ndarray]


def eta_increment(
    coeffs: CoefficientSet,
    k0: Field,
    x: np.ndarray,
    eta: np.ndarray,
    dw: np.ndarray,
    dB: np.ndarray,
    dt: float,
) -> np.ndarray:
    """
    Increment of eta for every initial vector.

    Args:
        x: States, shape (n, d).
        eta: Flows, shape (m, n, d).
        dw: Increments of w, shape (n, d1).
        dB: Increments of B^(0..d), shape (n, d + 1, d).
    """
    dsigma = coeffs.sigma.jacobian(x)  # (n, d, d1, d)
    db = coeffs.drift.jacobian(x)  # (n, d, d)
    k = k0(x).reshape(-1)  # (n,)
    noise = np.einsum("nikj,mnj,nk->mni", dsigma, eta, dw)
    drift = np.einsum("nij,mnj->mni", db, eta) * dt
    extra = k[None, :, None] * (dB[None, :, 0, :] + np.einsum("mnk,nki->mni", eta, dB[:, 1:, :]))
    return noise + drift + extra


def _simulate_flow_chunk(task: _FlowTask) -> _FlowResult:
    cfg = task.config
    d, d1 = task.coeffs.dim_d, task.coeffs.dim_d1
    m = task.etas.shape[0]
    w_noise = ChunkNoise(cfg.master_seed, task.chunk, task.count, d1, Stream.BROWNIAN)
    b_noise = ChunkNoise(cfg.master_seed, task.chunk, task.count, (d + 1) * d, Stream.FLOW)

    x = np.tile(task.start, (task.count, 1))
    eta = np.repeat(task.etas[:, None, :], task.count, axis=1)
    dead = np.zeros(task.count, dtype=bool)

    record_steps = cfg.record_steps
    paths = np.empty((task.count, record_steps.size, d)) if cfg.store_paths else None
    eta_paths = np.empty((m, task.count, record_steps.size, d)) if cfg.store_paths else None
    if paths is not None:
        paths[:, 0] = x
        eta_paths[:, :, 0] = eta
    next_record = 1

    for step in range(1, cfg.n_steps + 1):
        t0 = (step - 1) * cfg.dt
        h = min(cfg.dt, cfg.T - t0)
        dw = w_noise.draw(h)
        dB = b_noise.draw(h).reshape(task.count, d + 1, d)
        live = ~dead
        if live.any():
            xs = x[live]
            with np.errstate(over="ignore", invalid="ignore"):
                d_eta = eta_increment(task.coeffs, task.k0, xs, eta[:, live], dw[live], dB[live], h)
                moved = euler_step(task.coeffs, xs, dw[live], h, cfg.taming)
            new_eta = eta[:, live] + d_eta
            bad = ~np.all(np.isfinite(moved), axis=1) | ~np.all(np.isfinite(new_eta), axis=(0, 2))
            moved[bad] = np.nan
            new_eta[:, bad] = np.nan
            x[live] = moved
            eta[:, live] = new_eta
            dead[np.flatnonzero(live)[bad]] = True
        if paths is not None and next_record < record_steps.size and record_steps[next_record] == step:
            paths[:, next_record] = x
            eta_paths[:, :, next_record] = eta
            next_record += 1

    return _FlowResult(x, eta, dead, paths, eta_paths)


def derivative_flow(
    coeffs: CoefficientSet,
    start_x: Sequence[float],
    start_eta: Sequence[Sequence[float]],
    config: SimConfig,
    k0_field: Optional[Field] = None,
    pool: Optional[WorkerPool] = None,
) -> DerivativeFlowBatch:
    """
    Simulate (x, eta) for one or more initial eta on shared noise.

    The x-component uses the same w stream as euler_maruyama, so for equal
    seeds it reproduces the plain simulation path for path.

    Args:
        coeffs: Smooth coefficient set (typically mollified).
        start_x: Starting point.
        start_eta: One initial vector of shape (d,) or several, shape (m, d).
        config: Simulation config.
        k0_field: Bounded scalar field K0; defaults to K0 = 1.
        pool: Worker pool for chunk-parallel simulation.
    """
    d = coeffs.dim_d
    x0 = np.asarray(start_x, dtype=float).reshape(-1)
    etas = np.atleast_2d(np.asarray(start_eta, dtype=float))
    if x0.size != d or etas.shape[1] != d:
        raise ValueError(f"start_x and start_eta must have {d} components")
    k0 = k0_field if k0_field is not None else ConstantField(1.0, d)
    if not coeffs.smooth:
        logger.warning("Derivative flow with non-smooth coefficients", extra={"coefficients": coeffs.name})

    tasks = [
        _FlowTask(coeffs, k0, x0, etas, config, chunk, count) for chunk, count in chunk_layout(config.n_paths)
    ]
    pool = pool or WorkerPool(1)
    results: List[_FlowResult] = pool.map_ordered(_simulate_flow_chunk, tasks)

    batch = DerivativeFlowBatch(
        config=config,
        start=x0,
        times=config.times,
        terminal=np.concatenate([r.terminal for r in results]),
        path_keys=path_keys(config.n_paths),
        dead=np.concatenate([r.dead for r in results]),
        paths=np.concatenate([r.paths for r in results]) if config.store_paths else None,
        coefficients=coeffs.name,
        eta_starts=etas,
        eta_terminal=np.concatenate([r.eta_terminal for r in results], axis=1),
        eta_paths=np.concatenate([r.eta_paths for r in results], axis=1) if config.store_paths else None,
        k0=repr(k0),
    )
    if batch.dead_count:
        batch.flags.append("dead_paths")
    logger.info(
        "Simulated derivative flow",
        extra={
            "coefficients": coeffs.name,
            "n_paths": config.n_paths,
            "initial_eta": etas.shape[0],
            "seed": config.master_seed,
            "dead_paths": batch.dead_count,
        },
    )
    return batch
