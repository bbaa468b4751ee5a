"""Balls and the candidate balls searched by sup-type quantities."""

import hashlib
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy import special


@dataclass(frozen=True)
class Ball:
    """Open ball B_R(x) = {y : |x - y| < R}."""

    center: Tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @classmethod
    def at(cls, center: Sequence[float], radius: float) -> "Ball":
        return cls(tuple(float(c) for c in np.asarray(center, dtype=float).reshape(-1)), float(radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @property
    def volume(self) -> float:
        d = self.dim
        return float(np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0) * self.radius ** d)

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.atleast_2d(points) - self.center_array, axis=1) < self.radius

    def seed(self, salt: int = 0) -> int:
        """Deterministic 64-bit seed from the ball geometry."""
        key = ",".join(f"{c:.12e}" for c in self.center) + f"|{self.radius:.12e}|{salt}"
        return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")

    def to_dict(self) -> Dict[str, Any]:
        return {"center": list(self.center), "radius": self.radius}


def radius_ladder(R0: float, depth: int) -> np.ndarray:
    """rho_k = R0 2^{-k}, k = 0..depth."""
    return R0 * 2.0 ** -np.arange(depth + 1, dtype=float)


def lattice_centers(
    roi_center: np.ndarray,
    roi_radius: float,
    rho: float,
    cap: int,
) -> Tuple[np.ndarray, bool]:
    """
    Centres on a lattice of pitch rho/2 covering the region of interest.

    When the full lattice exceeds `cap` points it is thinned to an odd number
    of points per axis (so the region centre stays on it).

    Returns:
        (centres of shape (m, d), whether the lattice was thinned)
    """
    d = roi_center.size
    half = roi_radius + rho
    per_axis = int(np.floor(2.0 * half / (rho / 2.0))) + 1
    thinned = False
    max_axis = max(1, int(np.floor(cap ** (1.0 / d) + 1e-9)))
    if per_axis ** d > cap:
        per_axis = max_axis
        thinned = True
    if per_axis % 2 == 0:
        per_axis -= 1
    per_axis = max(per_axis, 1)
    axis = np.linspace(-half, half, per_axis) if per_axis > 1 else np.zeros(1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    centers = np.stack([g.reshape(-1) for g in grids], axis=1) + roi_center
    return centers, thinned


def singular_centers(singular: np.ndarray, rho: float, cap: int) -> np.ndarray:
    """Each singular point plus offsets of rho/2 along every axis."""
    if singular.shape[0] == 0:
        return singular
    pts = singular[:cap]
    d = pts.shape[1]
    offsets: List[np.ndarray] = [np.zeros(d)]
    for j in range(d):
        e = np.zeros(d)
        e[j] = rho / 2.0
        offsets.extend([e, -e])
    return (pts[:, None, :] + np.asarray(offsets)[None, :, :]).reshape(-1, d)
