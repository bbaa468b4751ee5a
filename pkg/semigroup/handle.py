"""Cached evolve results queried pointwise by interpolation."""

from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from fields.coefficients import CoefficientSet
from semigroup.grid import GridFunction
from semigroup.operator import GridOperator


class SemigroupHandle:
    """
    T_t f and D T_t f at arbitrary points, from grid snapshots.

    Snapshots are computed on first use (all pending times in one pass with
    `precompute`) and interpolated multilinearly; outside the box the values
    are zero, matching the boundary condition.

    Args:
        f: Initial data on the grid.
        coeffs: Coefficient set of the generator.
        dt_pde: Optional explicit time step.
    """

    def __init__(
        self,
        f: GridFunction,
        coeffs: CoefficientSet,
        op: Optional[GridOperator] = None,
        dt_pde: Optional[float] = None,
    ) -> None:
        self.f = f
        self.coeffs = coeffs
        self.op = op if op is not None else GridOperator(coeffs, f.spec)
        self.dt_pde = dt_pde
        self._snapshots: Dict[float, GridFunction] = {}
        self._values: Dict[float, RegularGridInterpolator] = {}
        self._gradients: Dict[float, RegularGridInterpolator] = {}

    def _key(self, t: float) -> float:
        return round(float(t), 12)

    def precompute(self, times: Sequence[float]) -> None:
        pending = sorted({self._key(t) for t in times} - set(self._snapshots))
        if pending:
            for t, snap in zip(pending, self.op.evolve_snapshots(self.f, pending, self.dt_pde)):
                self._snapshots[t] = snap

    def snapshot(self, t: float) -> GridFunction:
        key = self._key(t)
        if key not in self._snapshots:
            self.precompute([key])
        return self._snapshots[key]

    def _interpolator(self, values: np.ndarray) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            tuple(self.f.spec.axes()), values, method="linear", bounds_error=False, fill_value=0.0
        )

    def value(self, t: float, x: Any) -> np.ndarray:
        """T_t f at one point (scalar) or at an (n, d) array."""
        key = self._key(t)
        if key not in self._values:
            self._values[key] = self._interpolator(self.snapshot(key).values)
        pts = np.asarray(x, dtype=float)
        out = self._values[key](np.atleast_2d(pts))
        return out[0] if pts.ndim == 1 else out

    def gradient(self, t: float, x: Any) -> np.ndarray:
        """D T_t f at one point, shape (d,), or at an (n, d) array."""
        key = self._key(t)
        if key not in self._gradients:
            grad = self.op.gradient(self.snapshot(key))
            self._gradients[key] = self._interpolator(np.moveaxis(grad, 0, -1))
        pts = np.asarray(x, dtype=float)
        out = self._gradients[key](np.atleast_2d(pts))
        return out[0] if pts.ndim == 1 else out

    def directional(self, t: float, x: Any, eta: Any) -> np.ndarray:
        """(T_t f)_(eta)(x)."""
        return np.asarray(self.gradient(t, x)) @ np.asarray(eta, dtype=float)
