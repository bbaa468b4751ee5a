"""
Simulation of the SDE and of its derivative flow.

Usage:
    from fields import constant_coefficients
    from sde import SimConfig, euler_maruyama

    batch = euler_maruyama(
        constant_coefficients(),
        start=[0.0, 0.0, 0.0],
        config=SimConfig(dt=1e-3, T=2.0, n_paths=4096, master_seed=7, store_paths=False),
        radii=[1.0],
    )
    batch.exits.tau[:, 0].mean()  # close to 1/3
"""

from sde.coupling import drift_gap, skorokhod_check
from sde.euler import euler_maruyama, euler_step
from sde.exits import ExitTracker, exit_and_hitting
from sde.flow import derivative_flow, eta_increment
from sde.storage import load_batch, persist_batch
from sde.streams import CHUNK_SIZE, Stream, chunk_generator, chunk_layout, path_keys
from sde.types import DerivativeFlowBatch, ExitRecords, SimConfig, TrajectoryBatch

__all__ = [
    # Types
    "SimConfig",
    "ExitRecords",
    "TrajectoryBatch",
    "DerivativeFlowBatch",
    # Streams
    "CHUNK_SIZE",
    "Stream",
    "chunk_generator",
    "chunk_layout",
    "path_keys",
    # Simulation
    "euler_step",
    "euler_maruyama",
    "derivative_flow",
    "eta_increment",
    # Exits
    "ExitTracker",
    "exit_and_hitting",
    # Storage
    "persist_batch",
    "load_batch",
    # Coupling
    "drift_gap",
    "skorokhod_check",
]
