"""
Base classes and types for coefficient fields.

Every field is a vectorised map from points of R^d to scalars, vectors or
matrices. Fields are total functions: singular points carry a convention
value (or +inf where no convention exists) instead of raising, so they can be
evaluated from any worker without error paths.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, Optional, Sequence, Tuple

import numpy as np

if TYPE_CHECKING:
    from fields.mollify import MollifierSpec

# Relative step of the centred finite differences used when no analytic
# derivative is available.
FD_RELATIVE_STEP = 1e-5

# Distance below which a point is treated as sitting on a singular point.
SINGULAR_TOL = 1e-14


class FieldKind(str, Enum):
    """Field constructions known to the lab."""

    EXAMPLE = "example"
    REMARK24 = "remark24"
    CONSTANT = "constant"
    INVERSE_RADIAL = "inverse-radial"
    RADIAL = "radial"
    MOLLIFIED = "mollified"
    DERIVED = "derived"


@dataclass(frozen=True)
class FieldTraits:
    """Regularity metadata a field declares about itself."""

    kind: FieldKind
    smooth: bool = False
    bounded: bool = True
    analytic_jacobian: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "smooth": self.smooth,
            "bounded": self.bounded,
            "analytic_jacobian": self.analytic_jacobian,
        }


def as_points(x: Any, dim: int) -> Tuple[np.ndarray, bool]:
    """
    Normalise input to an (n, dim) float array.

    Returns:
        The point array and whether the input was a single point.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ValueError(f"expected a point of dimension {dim}, got shape {arr.shape}")
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of shape (n, {dim}), got {arr.shape}")
    return arr, False


def fd_steps(points: np.ndarray) -> np.ndarray:
    """Per-point finite-difference step h = 1e-5 * max(1, |x|)."""
    return FD_RELATIVE_STEP * np.maximum(1.0, np.linalg.norm(points, axis=-1))


class Field(ABC):
    """
    Abstract base class for all fields.

    Subclasses implement `_evaluate` on an (n, d) array and may override
    `_jacobian` with an analytic derivative.
    """

    traits: FieldTraits = FieldTraits(kind=FieldKind.DERIVED)

    def __init__(
        self,
        dim: int,
        value_shape: Tuple[int, ...] = (),
        singular_points: Optional[Sequence[Sequence[float]]] = None,
        roi_center: Optional[Sequence[float]] = None,
        roi_radius: float = 1.0,
    ) -> None:
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.value_shape = tuple(value_shape)
        if singular_points is None or len(singular_points) == 0:
            self._singular = np.zeros((0, dim))
        else:
            self._singular = np.asarray(singular_points, dtype=float).reshape(-1, dim)
        self.roi_center = (
            np.zeros(dim) if roi_center is None else np.asarray(roi_center, dtype=float)
        )
        self.roi_radius = float(roi_radius)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    @abstractmethod
    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (n, d) array; returns (n, *value_shape)."""

    def __call__(self, x: Any) -> np.ndarray:
        points, single = as_points(x, self.dim)
        values = self._evaluate(points)
        return values[0] if single else values

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        return self._fd_jacobian(points)

    def _fd_jacobian(self, points: np.ndarray) -> np.ndarray:
        n = points.shape[0]
        h = fd_steps(points)
        out = np.empty((n, *self.value_shape, self.dim))
        shape = (n,) + (1,) * len(self.value_shape)
        for j in range(self.dim):
            shift = np.zeros_like(points)
            shift[:, j] = h
            diff = self._evaluate(points + shift) - self._evaluate(points - shift)
            out[..., j] = diff / (2.0 * h.reshape(shape))
        return out

    def jacobian(self, x: Any) -> np.ndarray:
        """
        Derivative with respect to x, last axis indexing the direction.

        Uses the analytic derivative when the field declares one and centred
        finite differences otherwise.
        """
        points, single = as_points(x, self.dim)
        jac = self._jacobian(points)
        return jac[0] if single else jac

    def finite_difference_jacobian(self, x: Any) -> np.ndarray:
        """Centred finite-difference derivative, regardless of analytic support."""
        points, single = as_points(x, self.dim)
        jac = self._fd_jacobian(points)
        return jac[0] if single else jac

    def magnitude(self, x: Any) -> np.ndarray:
        """Euclidean (Frobenius for matrices) size of the value at each point."""
        points, single = as_points(x, self.dim)
        values = self._evaluate(points)
        if self.value_shape:
            axes = tuple(range(1, values.ndim))
            mags = np.sqrt(np.sum(values * values, axis=axes))
        else:
            mags = np.abs(values)
        return mags[0] if single else mags

    # ------------------------------------------------------------------
    # Metadata
    # ------------------------------------------------------------------

    @property
    def singular_points(self) -> np.ndarray:
        """Declared points where the field is not smooth, shape (k, d)."""
        return self._singular

    def near_singular(self, points: np.ndarray, radius: float = SINGULAR_TOL) -> np.ndarray:
        """Mask of points within `radius` of a declared singular point."""
        if self._singular.shape[0] == 0:
            return np.zeros(points.shape[0], dtype=bool)
        dist = np.linalg.norm(points[:, None, :] - self._singular[None, :, :], axis=-1)
        return np.any(dist <= radius, axis=1)

    def mollified(self, spec: "MollifierSpec") -> "Field":
        """Return the convolution of this field with the kernel of `spec`."""
        from fields.mollify import MollifiedField

        return MollifiedField(self, spec)

    def describe(self) -> Dict[str, Any]:
        """Constructor parameters, for reports. Subclasses extend this."""
        return {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.traits.kind.value,
            "dim": self.dim,
            "value_shape": list(self.value_shape),
            "singular_points": self._singular.tolist(),
            "traits": self.traits.to_dict(),
            **self.describe(),
        }

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.describe().items())
        return f"{type(self).__name__}({params})"


class ConstantField(Field):
    """A field equal to one value everywhere."""

    traits = FieldTraits(kind=FieldKind.CONSTANT, smooth=True, analytic_jacobian=True)

    def __init__(self, value: Any, dim: int) -> None:
        value_arr = np.asarray(value, dtype=float)
        super().__init__(dim=dim, value_shape=value_arr.shape)
        self.value = value_arr

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.value, (points.shape[0], *self.value_shape)).copy()

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        return np.zeros((points.shape[0], *self.value_shape, self.dim))

    def mollified(self, spec: "MollifierSpec") -> "Field":
        # Unit-mass kernel: constants are fixed points of mollification.
        return self

    def describe(self) -> Dict[str, Any]:
        return {"value": self.value.tolist()}
