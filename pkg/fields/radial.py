"""
Radially structured fields.

A radial vector field has the form phi(|x|) x/|x|. Both the unit field x/|x|
inside the example diffusion and the example's singular drift are of this
form, and mollifying by a spherically symmetric kernel keeps the form, so the
mollified field is again radial with a tabulated profile.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np

from fields.base import SINGULAR_TOL, Field, FieldKind, FieldTraits


class RadialProfile(ABC):
    """Scalar profile phi(r) on r >= 0."""

    singular_at_zero: bool = False

    @abstractmethod
    def value(self, r: np.ndarray) -> np.ndarray:
        """phi(r)."""

    @abstractmethod
    def derivative(self, r: np.ndarray) -> np.ndarray:
        """phi'(r)."""

    def describe(self) -> Dict[str, Any]:
        return {}


class UnitProfile(RadialProfile):
    """phi = 1, giving the unit field x/|x|."""

    singular_at_zero = True

    def value(self, r: np.ndarray) -> np.ndarray:
        return np.ones_like(r)

    def derivative(self, r: np.ndarray) -> np.ndarray:
        return np.zeros_like(r)

    def describe(self) -> Dict[str, Any]:
        return {"profile": "unit"}


class InverseProfile(RadialProfile):
    """phi(r) = -gamma/r on 0 < r <= cutoff, zero elsewhere (including r = 0)."""

    def __init__(self, gamma: float, cutoff: float = 1.0) -> None:
        self.gamma = float(gamma)
        self.cutoff = float(cutoff)
        self.singular_at_zero = self.gamma != 0.0

    def value(self, r: np.ndarray) -> np.ndarray:
        inside = (r > 0.0) & (r <= self.cutoff)
        out = np.zeros_like(r)
        out[inside] = -self.gamma / r[inside]
        return out

    def derivative(self, r: np.ndarray) -> np.ndarray:
        inside = (r > 0.0) & (r <= self.cutoff)
        out = np.zeros_like(r)
        out[inside] = self.gamma / r[inside] ** 2
        return out

    def describe(self) -> Dict[str, Any]:
        return {"profile": "inverse", "gamma": self.gamma, "cutoff": self.cutoff}


class TabulatedProfile(RadialProfile):
    """
    Profile given by a table, linearly interpolated.

    Beyond the last tabulated radius the `tail` profile is used.
    """

    def __init__(
        self,
        radii: np.ndarray,
        values: np.ndarray,
        tail: Optional[RadialProfile] = None,
    ) -> None:
        self.radii = np.asarray(radii, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.slopes = np.gradient(self.values, self.radii)
        self.tail = tail

    def _blend(self, r: np.ndarray, table: np.ndarray, tail_fn) -> np.ndarray:
        out = np.interp(r, self.radii, table)
        if self.tail is not None:
            beyond = r > self.radii[-1]
            if np.any(beyond):
                out[beyond] = tail_fn(r[beyond])
        return out

    def value(self, r: np.ndarray) -> np.ndarray:
        tail = self.tail.value if self.tail is not None else None
        return self._blend(r, self.values, tail)

    def derivative(self, r: np.ndarray) -> np.ndarray:
        tail = self.tail.derivative if self.tail is not None else None
        return self._blend(r, self.slopes, tail)

    def describe(self) -> Dict[str, Any]:
        return {"profile": "tabulated", "nodes": int(self.radii.size), "r_max": float(self.radii[-1])}


class RadialVectorField(Field):
    """
    v(x) = phi(|x|) x/|x| on R^d, with a declared value at the origin.

    The origin value is a convention (x/|x| has no limit there); for the unit
    field it is the vector with all entries d^{-1/2}.
    """

    traits = FieldTraits(kind=FieldKind.RADIAL, bounded=False, analytic_jacobian=True)

    def __init__(
        self,
        dim: int,
        profile: RadialProfile,
        origin_value: Optional[Sequence[float]] = None,
        roi_radius: float = 1.0,
    ) -> None:
        origin = np.zeros(dim) if origin_value is None else np.asarray(origin_value, dtype=float)
        singular = [np.zeros(dim)] if profile.singular_at_zero else None
        super().__init__(dim=dim, value_shape=(dim,), singular_points=singular, roi_radius=roi_radius)
        self.profile = profile
        self.origin_value = origin

    @classmethod
    def unit(cls, dim: int) -> "RadialVectorField":
        """x/|x| with the 0/0 := d^{-1/2} convention at the origin."""
        return cls(dim, UnitProfile(), origin_value=np.full(dim, dim ** -0.5))

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(points, axis=1)
        out = np.empty_like(points)
        at_origin = r <= SINGULAR_TOL
        away = ~at_origin
        phi = self.profile.value(r[away])
        out[away] = (phi / r[away])[:, None] * points[away]
        out[at_origin] = self.origin_value
        return out

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        n, d = points.shape
        r = np.linalg.norm(points, axis=1)
        jac = np.empty((n, d, d))
        at_origin = r <= SINGULAR_TOL
        away = ~at_origin
        ra = r[away]
        unit = points[away] / ra[:, None]
        outer = unit[:, :, None] * unit[:, None, :]
        phi = self.profile.value(ra)
        dphi = self.profile.derivative(ra)
        eye = np.eye(d)[None, :, :]
        jac[away] = dphi[:, None, None] * outer + (phi / ra)[:, None, None] * (eye - outer)
        if self.profile.singular_at_zero:
            jac[at_origin] = np.inf
        else:
            # phi(0) = 0 and phi(r)/r -> phi'(0)
            slope0 = self.profile.derivative(np.zeros(1))[0]
            jac[at_origin] = slope0 * np.eye(d)
        return jac

    def mollified(self, spec: Any) -> "RadialVectorField":
        from fields.mollify import mollify_radial

        return mollify_radial(self, spec)

    def describe(self) -> Dict[str, Any]:
        return {**self.profile.describe(), "origin_value": self.origin_value.tolist()}


class InverseRadialField(Field):
    """
    Scalar bump b(x) = scale / |x - c| on |x - c| < radius, zero outside.

    At the centre the value is +inf: there is no finite convention, and
    quadrature excludes such nodes.
    """

    traits = FieldTraits(kind=FieldKind.INVERSE_RADIAL, bounded=False, analytic_jacobian=True)

    def __init__(
        self,
        dim: int,
        center: Optional[Sequence[float]] = None,
        radius: float = 1.0,
        scale: float = 1.0,
    ) -> None:
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        if radius <= 0:
            raise ValueError("radius must be positive")
        super().__init__(dim=dim, singular_points=[c], roi_center=c, roi_radius=radius)
        self.center = c
        self.radius = float(radius)
        self.scale = float(scale)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        dist = np.linalg.norm(points - self.center, axis=1)
        out = np.zeros(points.shape[0])
        inside = dist < self.radius
        with np.errstate(divide="ignore"):
            out[inside] = self.scale / dist[inside]
        return out

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        diff = points - self.center
        dist = np.linalg.norm(diff, axis=1)
        jac = np.zeros_like(points)
        inside = (dist < self.radius) & (dist > SINGULAR_TOL)
        jac[inside] = -self.scale * diff[inside] / dist[inside, None] ** 3
        jac[dist <= SINGULAR_TOL] = np.inf
        return jac

    def describe(self) -> Dict[str, Any]:
        return {"center": self.center.tolist(), "radius": self.radius, "scale": self.scale}
