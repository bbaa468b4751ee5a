"""
Exit and hitting times.

    tau_R   = inf{t >= 0 : |x_t| >= R}
    gamma_R = inf{t >= 0 : |x_t| <= R}

Crossings are located on the step grid and the crossing time interpolated
linearly in |x| over the last step.
"""

from typing import Sequence

import numpy as np

from errors import PreconditionError
from sde.types import ExitRecords, TrajectoryBatch


class ExitTracker:
    """Online first-crossing recorder, updated once per Euler step."""

    def __init__(self, radii: Sequence[float], start_norms: np.ndarray) -> None:
        self.radii = np.asarray(radii, dtype=float).reshape(-1)
        if self.radii.size and not np.all(self.radii > 0):
            raise PreconditionError("exit radii must be positive")
        n, k = start_norms.size, self.radii.size
        r0 = start_norms[:, None]
        self.tau = np.where(r0 >= self.radii, 0.0, np.nan) * np.ones((n, k))
        self.gamma = np.where(r0 <= self.radii, 0.0, np.nan) * np.ones((n, k))
        self.gamma16 = np.where(r0 <= self.radii / 16.0, 0.0, np.nan) * np.ones((n, k))

    @staticmethod
    def _crossing(t0: float, t1: float, r0: np.ndarray, r1: np.ndarray, level: np.ndarray) -> np.ndarray:
        span = r1 - r0
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(span != 0.0, (level - r0) / span, 1.0)
        return t0 + np.clip(frac, 0.0, 1.0) * (t1 - t0)

    def update(self, t0: float, t1: float, r0: np.ndarray, r1: np.ndarray, active: np.ndarray) -> None:
        """Record crossings between |x_{t0}| = r0 and |x_{t1}| = r1 on active rows."""
        if not self.radii.size:
            return
        a = active[:, None]
        r0c, r1c = r0[:, None], r1[:, None]

        out = a & np.isnan(self.tau) & (r1c >= self.radii)
        if out.any():
            times = self._crossing(t0, t1, r0c, r1c, self.radii[None, :])
            self.tau = np.where(out, times, self.tau)

        into = a & np.isnan(self.gamma) & (r1c <= self.radii)
        if into.any():
            times = self._crossing(t0, t1, r0c, r1c, self.radii[None, :])
            self.gamma = np.where(into, times, self.gamma)

        small = self.radii / 16.0
        into16 = a & np.isnan(self.gamma16) & (r1c <= small)
        if into16.any():
            times = self._crossing(t0, t1, r0c, r1c, small[None, :])
            self.gamma16 = np.where(into16, times, self.gamma16)

    def all_exited(self) -> np.ndarray:
        """Rows that have left the largest tracked ball."""
        if not self.radii.size:
            return np.zeros(self.tau.shape[0], dtype=bool)
        return ~np.isnan(self.tau[:, int(np.argmax(self.radii))])

    def records(self, horizon: float) -> ExitRecords:
        return ExitRecords(self.radii.copy(), self.tau, self.gamma, self.gamma16, horizon)


def exit_and_hitting(batch: TrajectoryBatch, radii: Sequence[float]) -> ExitRecords:
    """
    Exit records recomputed from stored paths.

    The resolution is that of the stored snapshots, so batches recorded with
    record_every > 1 get coarser crossing times than the online records.

    Raises:
        PreconditionError: The batch has no stored paths or a radius is not positive.
    """
    paths = batch.require_paths()
    norms = np.linalg.norm(paths, axis=2)
    tracker = ExitTracker(radii, norms[:, 0])
    alive = batch.alive
    for j in range(1, batch.times.size):
        tracker.update(batch.times[j - 1], batch.times[j], norms[:, j - 1], norms[:, j], alive)
    return tracker.records(batch.config.T)
