"""
Explicit finite-difference realisation of T_t for L u = 1/2 a^{ij} D_ij u + b^i D_i u.

Second derivatives use centred differences, mixed derivatives the four-corner
stencil, and first derivatives are upwinded along the sign of b. Outside the
box the solution is zero.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import CFLViolation, PreconditionError
from fields.coefficients import CoefficientSet
from logging_config import get_logger
from semigroup.grid import GridFunction, GridSpec

logger = get_logger(__name__)

# Mass within this many pitches of the boundary counts as contamination.
BOUNDARY_WIDTH = 3
BOUNDARY_LIMIT = 1e-6
# Default step as a fraction of the stability limit.
CFL_SAFETY = 0.9


class GridOperator:
    """
    Coefficients of L sampled once on a grid, with stepping and differencing.

    Args:
        coeffs: Coefficient set, evaluated at the nodes. Non-finite values
            at singular nodes are replaced by zero and flagged.
        spec: The grid.
    """

    def __init__(self, coeffs: CoefficientSet, spec: GridSpec) -> None:
        if coeffs.dim_d != spec.dim:
            raise PreconditionError(f"coefficients on R^{coeffs.dim_d}, grid in {spec.dim} dimensions")
        self.coeffs = coeffs
        self.spec = spec
        self.flags: List[str] = []

        pts = spec.points()
        shape = spec.shape
        d, h = spec.dim, spec.h
        a = self._sanitize(coeffs.diffusion(pts), "diffusion")
        b = self._sanitize(coeffs.drift(pts), "drift")
        self._sigma = self._sanitize(coeffs.sigma(pts), "sigma")

        self.diag = [a[:, i, i].reshape(shape) / (2.0 * h * h) for i in range(d)]
        self.cross: Dict[Tuple[int, int], np.ndarray] = {}
        for i in range(d):
            for j in range(i + 1, d):
                cij = a[:, i, j].reshape(shape) / (4.0 * h * h)
                if np.any(cij != 0.0):
                    self.cross[(i, j)] = cij
        self.up = [np.maximum(b[:, i], 0.0).reshape(shape) / h for i in range(d)]
        self.down = [np.maximum(-b[:, i], 0.0).reshape(shape) / h for i in range(d)]
        self.centre_rate = sum(2.0 * self.diag[i] + self.up[i] + self.down[i] for i in range(d))

    def _sanitize(self, values: np.ndarray, name: str) -> np.ndarray:
        bad = ~np.isfinite(values)
        if bad.any():
            if "singular_nodes" not in self.flags:
                self.flags.append("singular_nodes")
            logger.warning(
                "Non-finite coefficient values on grid nodes replaced by zero",
                extra={"coefficient": name, "entries": int(bad.sum())},
            )
            values = np.where(bad, 0.0, values)
        return values

    # ------------------------------------------------------------------
    # Stability
    # ------------------------------------------------------------------

    @property
    def cfl_limit(self) -> float:
        """h^2 delta / (2d)."""
        return self.spec.h ** 2 * self.coeffs.delta / (2.0 * self.spec.dim)

    @property
    def stable_dt(self) -> float:
        """Largest dt within the CFL bound that keeps every centre coefficient positive."""
        rate = float(np.max(self.centre_rate))
        limit = self.cfl_limit if rate == 0.0 else min(self.cfl_limit, 1.0 / rate)
        return CFL_SAFETY * limit

    def check_cfl(self, dt: float) -> None:
        """
        Raises:
            CFLViolation: dt above h^2 delta / (2d), or a nonpositive centre
                coefficient 1 - dt (sum of off-centre rates) somewhere.
        """
        if dt <= 0:
            raise CFLViolation(f"time step must be positive, got {dt}")
        if dt > self.cfl_limit * (1.0 + 1e-12):
            raise CFLViolation(f"dt={dt:.3g} exceeds h^2 delta/(2d) = {self.cfl_limit:.3g}")
        worst = 1.0 - dt * float(np.max(self.centre_rate))
        if worst <= 0.0:
            raise CFLViolation(f"dt={dt:.3g} makes the centre coefficient {worst:.3g} nonpositive")

    # ------------------------------------------------------------------
    # Stencils
    # ------------------------------------------------------------------

    def _shifted(self, padded: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
        return padded[tuple(slice(1 + o, 1 + o + n) for o, n in zip(offsets, self.spec.shape))]

    def _unit(self, i: int, sign: int = 1) -> List[int]:
        e = [0] * self.spec.dim
        e[i] = sign
        return e

    def apply(self, u: np.ndarray) -> np.ndarray:
        """L u at every node with zero values outside the box."""
        d = self.spec.dim
        padded = np.pad(u, 1)
        out = -self.centre_rate * u
        for i in range(d):
            out += (self.diag[i] + self.up[i]) * self._shifted(padded, self._unit(i, 1))
            out += (self.diag[i] + self.down[i]) * self._shifted(padded, self._unit(i, -1))
        for (i, j), cij in self.cross.items():
            corners = 0.0
            for si, sj, sign in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
                off = [0] * d
                off[i], off[j] = si, sj
                corners = corners + sign * self._shifted(padded, off)
            out += cij * corners
        return out

    def gradient(self, gf: GridFunction) -> np.ndarray:
        """Centred differences, shape (d, *grid shape)."""
        padded = np.pad(gf.values, 1)
        h2 = 2.0 * self.spec.h
        return np.stack(
            [
                (self._shifted(padded, self._unit(i, 1)) - self._shifted(padded, self._unit(i, -1))) / h2
                for i in range(self.spec.dim)
            ]
        )

    def sigma_column(self, k: int) -> np.ndarray:
        """sigma^{.k} at the nodes, shape (d, *grid shape)."""
        return np.moveaxis(self._sigma[:, :, k], 0, 1).reshape((self.spec.dim, *self.spec.shape))

    def nonzero_columns(self) -> List[int]:
        """Noise indices k whose column of sigma is not identically zero on the grid."""
        return [k for k in range(self._sigma.shape[2]) if np.any(self._sigma[:, :, k] != 0.0)]

    # ------------------------------------------------------------------
    # Time stepping
    # ------------------------------------------------------------------

    def step(self, u: np.ndarray, dt: float) -> np.ndarray:
        return u + dt * self.apply(u)

    def _advance(self, u: np.ndarray, span: float, dt: float) -> Tuple[np.ndarray, int]:
        if span <= 0.0:
            return u, 0
        n = int(np.ceil(span / dt - 1e-9))
        sub = span / n
        for _ in range(n):
            u = self.step(u, sub)
        return u, n

    def _finish(self, values: np.ndarray, time_tag: float) -> GridFunction:
        out = GridFunction(self.spec, values, time_tag)
        for flag in self.flags:
            out.flag(flag)
        total = float(np.sum(np.abs(values)))
        if total > 0 and out.boundary_mass(BOUNDARY_WIDTH) > BOUNDARY_LIMIT * total:
            out.flag("boundary_contamination")
        return out

    def evolve(self, f: GridFunction, t: float, dt: Optional[float] = None) -> GridFunction:
        """T_t f; the step is shortened so that t is hit exactly."""
        return self.evolve_snapshots(f, [t], dt)[0]

    def evolve_snapshots(self, f: GridFunction, times: Sequence[float], dt: Optional[float] = None) -> List[GridFunction]:
        """
        T_t f for every t in `times`, computed in one pass.

        Returns:
            Grid functions in the order of `times`, tagged f.time_tag + t.
        """
        if f.spec != self.spec:
            raise PreconditionError("grid function and operator live on different grids")
        if any(t < 0 for t in times):
            raise PreconditionError("evolution times must be nonnegative")
        dt = self.stable_dt if dt is None else dt
        self.check_cfl(dt)

        order = np.argsort(times, kind="stable")
        results: List[Optional[GridFunction]] = [None] * len(times)
        u = f.values
        now = 0.0
        steps = 0
        for idx in order:
            target = float(times[idx])
            u, n = self._advance(u, target - now, dt)
            steps += n
            now = max(now, target)
            results[idx] = self._finish(u.copy(), f.time_tag + target)
        logger.debug(
            "Evolved grid function",
            extra={"times": [float(t) for t in times], "steps": steps, "dt": dt, "nodes": self.spec.size},
        )
        return results  # type: ignore[return-value]


def evolve(f: GridFunction, coeffs: CoefficientSet, t: float, dt_pde: Optional[float] = None) -> GridFunction:
    """
    u(t) for du/dt = L u, u(0) = f, zero outside the box.

    Raises:
        CFLViolation: dt_pde violates the stability bound (checked before
            any stepping).
    """
    op = GridOperator(coeffs, f.spec)
    out = op.evolve(f, t, dt_pde)
    if "boundary_contamination" in out.flags:
        logger.warning("Boundary contamination after evolution", extra={"t": t, "h": f.spec.h})
    return out
