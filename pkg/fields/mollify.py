"""
Mollification by the standard bump kernel.

zeta(y) = C exp(1/(|y|^2 - 1)) on |y| < 1 and zeta_n(y) = n^d zeta(n y).
Convolutions use a fixed polar product rule over B_{1/n}: midpoint radial
nodes times an antipodally symmetric set of directions. Weights are normalised
to sum to one, so constants are reproduced exactly and odd parts cancel.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Tuple

import numpy as np
from scipy import integrate, special, stats
from scipy.stats import qmc

from fields.base import Field, FieldKind, FieldTraits, as_points
from fields.radial import RadialVectorField, TabulatedProfile
from logging_config import get_logger

logger = get_logger(__name__)

# Max (points x nodes) evaluated per vectorised chunk.
_CHUNK_BUDGET = 1 << 18


@dataclass(frozen=True)
class MollifierSpec:
    """Mollification scale and quadrature size."""

    n: int
    radial_nodes: int = 32
    angular_nodes: int = 64

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("mollification scale n must be a positive integer")
        if self.radial_nodes < 2 or self.angular_nodes < 2:
            raise ValueError("mollifier quadrature needs at least 2 radial and 2 angular nodes")
        if self.angular_nodes % 2:
            raise ValueError("angular node count must be even (directions come in antipodal pairs)")

    @property
    def support_radius(self) -> float:
        return 1.0 / self.n

    def coarse(self) -> "MollifierSpec":
        """Half the radial resolution, for error estimates."""
        return MollifierSpec(self.n, max(2, self.radial_nodes // 2), self.angular_nodes)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "radial_nodes": self.radial_nodes, "angular_nodes": self.angular_nodes}


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^{d-1}."""
    return float(2.0 * np.pi ** (dim / 2.0) / special.gamma(dim / 2.0))


def _bump(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r, dtype=float)
    inside = r < 1.0
    out[inside] = np.exp(1.0 / (r[inside] ** 2 - 1.0))
    return out


@lru_cache(maxsize=None)
def kernel_constant(dim: int) -> float:
    """C making the bump kernel integrate to one in dimension `dim`."""
    radial, _ = integrate.quad(lambda r: r ** (dim - 1) * np.exp(1.0 / (r * r - 1.0)), 0.0, 1.0, limit=200)
    return 1.0 / (sphere_area(dim) * radial)


def kernel(y: np.ndarray, n: int = 1) -> np.ndarray:
    """zeta_n evaluated at points y of shape (m, d)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    dim = y.shape[1]
    return kernel_constant(dim) * n ** dim * _bump(n * np.linalg.norm(y, axis=1))


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """
    Deterministic, antipodally symmetric unit directions.

    Fibonacci lattice in d = 3, equispaced angles in d = 2, normalised Gaussian
    images of a Sobol set otherwise.
    """
    half = count // 2
    if dim == 1:
        base = np.ones((1, 1))
    elif dim == 2:
        angles = np.pi * (np.arange(half) + 0.5) / half
        base = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    elif dim == 3:
        k = np.arange(half) + 0.5
        z = k / half  # upper hemisphere; the mirror set covers the rest
        golden = np.pi * (3.0 - np.sqrt(5.0))
        rho = np.sqrt(1.0 - z * z)
        theta = golden * k
        base = np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)
    else:
        u = qmc.Sobol(d=dim, scramble=True, seed=dim).random(half)
        g = stats.norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        base = g / np.linalg.norm(g, axis=1, keepdims=True)
    return np.vstack([base, -base])


@lru_cache(maxsize=64)
def polar_rule(dim: int, spec: MollifierSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Offsets y_j in B_{1/n} and weights w_j (summing to one) for the kernel.

    Returns:
        (offsets of shape (m, d), weights of shape (m,))
    """
    s = (np.arange(spec.radial_nodes) + 0.5) / spec.radial_nodes
    radial_w = s ** (dim - 1) * _bump(s)
    directions = sphere_directions(dim, spec.angular_nodes)
    offsets = (s[:, None, None] * directions[None, :, :]).reshape(-1, dim) / spec.n
    weights = np.repeat(radial_w, directions.shape[0])
    weights = weights / weights.sum()
    return offsets, weights


def kernel_mass(dim: int, spec: MollifierSpec) -> float:
    """Unnormalised midpoint-rule mass of zeta_n, which should be close to 1."""
    s = (np.arange(spec.radial_nodes) + 0.5) / spec.radial_nodes
    return float(kernel_constant(dim) * sphere_area(dim) * np.sum(s ** (dim - 1) * _bump(s)) / spec.radial_nodes)


def _convolve(field: Field, points: np.ndarray, offsets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    m = offsets.shape[0]
    chunk = max(1, _CHUNK_BUDGET // m)
    out = np.empty((points.shape[0], *field.value_shape))
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        shifted = (block[:, None, :] - offsets[None, :, :]).reshape(-1, field.dim)
        values = field(shifted).reshape(block.shape[0], m, *field.value_shape)
        out[start:start + chunk] = np.tensordot(weights, values, axes=([0], [1]))
    return out


class MollifiedField(Field):
    """Generic pointwise convolution of a field with zeta_n."""

    traits = FieldTraits(kind=FieldKind.MOLLIFIED, smooth=True, bounded=True)

    def __init__(self, inner: Field, spec: MollifierSpec) -> None:
        super().__init__(
            dim=inner.dim,
            value_shape=inner.value_shape,
            roi_center=inner.roi_center,
            roi_radius=inner.roi_radius + spec.support_radius,
        )
        self.inner = inner
        self.spec = spec

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        offsets, weights = polar_rule(self.dim, self.spec)
        return _convolve(self.inner, points, offsets, weights)

    def evaluate_with_error(self, x: Any) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Value, error estimate and near-singular flag at each point.

        The error estimate is the gap to a rule with half the radial nodes.
        Where a singular point of the inner field lies inside the kernel
        support the rule cannot resolve it, so the estimate is enlarged
        fourfold and the point flagged.
        """
        points, single = as_points(x, self.dim)
        fine = self._evaluate(points)
        offsets, weights = polar_rule(self.dim, self.spec.coarse())
        coarse = _convolve(self.inner, points, offsets, weights)
        diff = np.abs(fine - coarse)
        if self.value_shape:
            diff = diff.reshape(points.shape[0], -1).max(axis=1)
        flagged = self.inner.near_singular(points, radius=self.spec.support_radius)
        err = np.where(flagged, 4.0 * diff, diff)
        if flagged.any():
            logger.debug(
                "Mollifier quadrature near singular points",
                extra={"flagged": int(flagged.sum()), "n": self.spec.n},
            )
        if single:
            return fine[0], err[0], flagged[0]
        return fine, err, flagged

    def describe(self) -> Dict[str, Any]:
        return {"inner": self.inner.traits.kind.value, **self.spec.to_dict()}


def mollify(field: Field, spec: MollifierSpec) -> Field:
    """
    Convolve `field` with zeta_n.

    Constants come back unchanged, radial and example fields take the
    tabulated-profile route, everything else is convolved pointwise.
    """
    return field.mollified(spec)


def _profile_grid(n: int, r_max: float = 16.0) -> np.ndarray:
    inner = np.linspace(0.0, 4.0 / n, 801)
    outer = np.geomspace(4.0 / n, r_max, 400)
    return np.unique(np.concatenate([inner, outer]))


def mollify_radial(field: RadialVectorField, spec: MollifierSpec) -> RadialVectorField:
    """
    Mollify phi(|x|) x/|x| into psi(|x|) x/|x| with psi tabulated.

    psi(r) is the first component of the convolution evaluated at r e_1. Past
    the table the original profile is used.
    """
    radii = _profile_grid(spec.n)
    axis_points = np.zeros((radii.size, field.dim))
    axis_points[:, 0] = radii
    offsets, weights = polar_rule(field.dim, spec)
    psi = _convolve(field, axis_points, offsets, weights)[:, 0]
    psi[0] = 0.0  # odd in x, and the direction set is antipodally symmetric
    profile = TabulatedProfile(radii, psi, tail=field.profile)
    logger.debug(
        "Tabulated mollified radial profile",
        extra={"n": spec.n, "nodes": int(radii.size), "psi_max": float(np.max(np.abs(psi)))},
    )
    return RadialVectorField(field.dim, profile, origin_value=np.zeros(field.dim), roi_radius=field.roi_radius)
