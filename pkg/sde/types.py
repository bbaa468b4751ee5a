"""
Type definitions for simulated path ensembles.

This module contains the simulation config, the exit-time records and the
trajectory batches produced by the Euler scheme and the derivative flow.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from errors import PreconditionError


@dataclass(frozen=True)
class SimConfig:
    """
    Euler scheme configuration.

    record_every thins the stored path snapshots; store_paths=False keeps
    only terminal points and online exit records, which is what
    acceptance-scale ensembles use.
    """

    dt: float
    T: float
    n_paths: int
    master_seed: int = 0
    taming: bool = False
    record_every: int = 1
    store_paths: bool = True
    stop_on_exit: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0 or not self.T > 0:
            raise PreconditionError(f"dt and T must be positive, got dt={self.dt}, T={self.T}")
        if self.dt > self.T:
            raise PreconditionError(f"dt={self.dt} exceeds the horizon T={self.T}")
        if self.n_paths < 1:
            raise PreconditionError("n_paths must be at least 1")
        if self.record_every < 1:
            raise PreconditionError("record_every must be at least 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise PreconditionError("master_seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.T / self.dt - 1e-9))

    @property
    def record_steps(self) -> np.ndarray:
        """Step indices at which snapshots are stored (always includes 0 and the last)."""
        steps = np.arange(0, self.n_steps + 1, self.record_every)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps

    @property
    def times(self) -> np.ndarray:
        return np.minimum(self.record_steps * self.dt, self.T)

    def with_seed(self, master_seed: int) -> "SimConfig":
        return SimConfig(**{**self.to_dict(), "master_seed": master_seed})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dt": self.dt,
            "T": self.T,
            "n_paths": self.n_paths,
            "master_seed": self.master_seed,
            "taming": self.taming,
            "record_every": self.record_every,
            "store_paths": self.store_paths,
            "stop_on_exit": self.stop_on_exit,
        }


@dataclass
class ExitRecords:
    """
    Exit times tau_R, hitting times gamma_R and gamma_{R/16} per path and radius.

    NaN marks a censored path (no crossing up to the horizon).
    """

    radii: np.ndarray  # (k,)
    tau: np.ndarray  # (n, k)
    gamma: np.ndarray  # (n, k)
    gamma_sixteenth: np.ndarray  # (n, k), hitting of the ball of radius R/16
    horizon: float

    @property
    def censored(self) -> np.ndarray:
        return np.isnan(self.tau)

    @property
    def tau_prime(self) -> np.ndarray:
        """tau_R capped at R^2; censored paths count as R^2 once T >= R^2."""
        cap = self.radii[None, :] ** 2
        capped = np.minimum(self.tau, cap)
        resolved = self.censored & (self.horizon >= cap)
        return np.where(resolved, cap, capped)

    def column(self, radius: float) -> int:
        """Index of the tracked radius closest to `radius`."""
        idx = int(np.argmin(np.abs(self.radii - radius)))
        if not np.isclose(self.radii[idx], radius, rtol=1e-9, atol=0.0):
            raise PreconditionError(f"radius {radius} is not tracked (tracked: {self.radii.tolist()})")
        return idx

    def subset(self, mask: np.ndarray) -> "ExitRecords":
        return ExitRecords(self.radii, self.tau[mask], self.gamma[mask], self.gamma_sixteenth[mask], self.horizon)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radii": self.radii.tolist(),
            "horizon": self.horizon,
            "censored": self.censored.sum(axis=0).tolist(),
        }


@dataclass
class TrajectoryBatch:
    """
    A simulated ensemble.

    paths has shape (n_paths, len(times), d) when paths were stored; terminal
    always holds x_T. Dead paths (non-finite state) stay in the arrays with
    NaN values and are excluded from statistics via `alive`.
    """

    config: SimConfig
    start: np.ndarray
    times: np.ndarray
    terminal: np.ndarray
    path_keys: np.ndarray
    dead: np.ndarray
    paths: Optional[np.ndarray] = None
    exits: Optional[ExitRecords] = None
    coefficients: str = "custom"
    flags: List[str] = field(default_factory=list)

    @property
    def n_paths(self) -> int:
        return self.terminal.shape[0]

    @property
    def dim(self) -> int:
        return self.terminal.shape[1]

    @property
    def alive(self) -> np.ndarray:
        return ~self.dead

    @property
    def dead_count(self) -> int:
        return int(self.dead.sum())

    def require_paths(self) -> np.ndarray:
        if self.paths is None:
            raise PreconditionError("this batch was simulated with store_paths=False")
        return self.paths

    def alive_paths(self) -> np.ndarray:
        return self.require_paths()[self.alive]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "start": self.start.tolist(),
            "coefficients": self.coefficients,
            "n_paths": self.n_paths,
            "records": int(self.times.size),
            "dead_paths": self.dead_count,
            "stored_paths": self.paths is not None,
            "exits": self.exits.to_dict() if self.exits is not None else None,
            "flags": list(self.flags),
        }


@dataclass
class DerivativeFlowBatch(TrajectoryBatch):
    """
    A TrajectoryBatch plus the derivative flow eta for several initial eta.

    eta_terminal has shape (m, n_paths, d) for m initial vectors sharing one
    noise realisation; eta_paths (m, n_paths, len(times), d) when stored.
    """

    eta_starts: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    eta_terminal: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))
    eta_paths: Optional[np.ndarray] = None
    k0: str = "1"

    def eta(self, index: int = 0) -> np.ndarray:
        """Terminal eta for the index-th initial vector."""
        return self.eta_terminal[index]

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "eta_starts": self.eta_starts.tolist(), "k0": self.k0}
