"""
Test functions with known L_p norms.

Gaussians, ball indicators and tensor cos^2 bumps. Each member knows its
L_p norm in closed form, its gradient and (where smooth) its Hessian, so it
can serve as f in occupation and heat-kernel checks, as u in the embedding
inequality, and as initial data on grids.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
from scipy import special

from errors import DegenerateFamilyError, PreconditionError


def _points(x: Any) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


class TestFunction(ABC):
    """A scalar test function on R^d."""

    # not a pytest test class
    __test__ = False

    def __init__(self, center: Sequence[float], amplitude: float = 1.0) -> None:
        self.center = np.asarray(center, dtype=float)
        self.amplitude = float(amplitude)

    @property
    def dim(self) -> int:
        return self.center.size

    @abstractmethod
    def __call__(self, x: Any) -> np.ndarray:
        """Values at (n, d) points."""

    @abstractmethod
    def lp_norm(self, p: float) -> float:
        """||f||_{L_p(R^d)}."""

    @property
    @abstractmethod
    def support_radius(self) -> float:
        """Radius around the centre outside which f is (numerically) zero."""

    def gradient(self, x: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no gradient")

    def hessian(self, x: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no Hessian")

    @abstractmethod
    def scaled(self, factor: float) -> "TestFunction":
        """Same shape with amplitude multiplied by `factor`."""

    @abstractmethod
    def dilated(self, factor: float) -> "TestFunction":
        """Same centre, spatial extent multiplied by `factor`."""

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": type(self).__name__, "center": self.center.tolist(), "amplitude": self.amplitude}


class Gaussian(TestFunction):
    """A exp(-|x - c|^2 / (2 w^2))."""

    def __init__(self, center: Sequence[float], width: float, amplitude: float = 1.0) -> None:
        super().__init__(center, amplitude)
        if width <= 0:
            raise PreconditionError("Gaussian width must be positive")
        self.width = float(width)

    def __call__(self, x: Any) -> np.ndarray:
        diff = _points(x) - self.center
        return self.amplitude * np.exp(-np.sum(diff * diff, axis=1) / (2.0 * self.width ** 2))

    def gradient(self, x: Any) -> np.ndarray:
        pts = _points(x)
        return -(pts - self.center) / self.width ** 2 * self(pts)[:, None]

    def hessian(self, x: Any) -> np.ndarray:
        pts = _points(x)
        diff = (pts - self.center) / self.width ** 2
        outer = diff[:, :, None] * diff[:, None, :]
        eye = np.eye(self.dim)[None] / self.width ** 2
        return (outer - eye) * self(pts)[:, None, None]

    def lp_norm(self, p: float) -> float:
        return self.amplitude * (2.0 * np.pi * self.width ** 2 / p) ** (self.dim / (2.0 * p))

    @property
    def support_radius(self) -> float:
        return 8.0 * self.width

    def scaled(self, factor: float) -> "Gaussian":
        return Gaussian(self.center, self.width, self.amplitude * factor)

    def dilated(self, factor: float) -> "Gaussian":
        return Gaussian(self.center, self.width * factor, self.amplitude)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "width": self.width}


class IndicatorBall(TestFunction):
    """A I_{|x - c| < r}."""

    def __init__(self, center: Sequence[float], radius: float, amplitude: float = 1.0) -> None:
        super().__init__(center, amplitude)
        if radius <= 0:
            raise PreconditionError("indicator radius must be positive")
        self.radius = float(radius)

    def __call__(self, x: Any) -> np.ndarray:
        dist = np.linalg.norm(_points(x) - self.center, axis=1)
        return np.where(dist < self.radius, self.amplitude, 0.0)

    def lp_norm(self, p: float) -> float:
        d = self.dim
        volume = np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0) * self.radius ** d
        return abs(self.amplitude) * volume ** (1.0 / p)

    @property
    def support_radius(self) -> float:
        return self.radius

    def scaled(self, factor: float) -> "IndicatorBall":
        return IndicatorBall(self.center, self.radius, self.amplitude * factor)

    def dilated(self, factor: float) -> "IndicatorBall":
        return IndicatorBall(self.center, self.radius * factor, self.amplitude)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "radius": self.radius}


class TensorBump(TestFunction):
    """A prod_i cos^2(pi (x_i - c_i) / (2 h)) on the cube |x_i - c_i| < h."""

    def __init__(self, center: Sequence[float], half_width: float, amplitude: float = 1.0) -> None:
        super().__init__(center, amplitude)
        if half_width <= 0:
            raise PreconditionError("bump half-width must be positive")
        self.half_width = float(half_width)

    def _factors(self, pts: np.ndarray) -> "tuple[np.ndarray, np.ndarray, np.ndarray]":
        s = (pts - self.center) / self.half_width
        inside = np.abs(s) < 1.0
        arg = 0.5 * np.pi * s
        val = np.where(inside, np.cos(arg) ** 2, 0.0)
        dval = np.where(inside, -np.sin(2.0 * arg) * 0.5 * np.pi / self.half_width, 0.0)
        ddval = np.where(inside, -np.cos(2.0 * arg) * 0.5 * (np.pi / self.half_width) ** 2, 0.0)
        return val, dval, ddval

    def __call__(self, x: Any) -> np.ndarray:
        val, _, _ = self._factors(_points(x))
        return self.amplitude * np.prod(val, axis=1)

    def gradient(self, x: Any) -> np.ndarray:
        val, dval, _ = self._factors(_points(x))
        out = np.empty_like(val)
        for i in range(self.dim):
            others = np.prod(np.delete(val, i, axis=1), axis=1)
            out[:, i] = dval[:, i] * others
        return self.amplitude * out

    def hessian(self, x: Any) -> np.ndarray:
        val, dval, ddval = self._factors(_points(x))
        n, d = val.shape
        out = np.empty((n, d, d))
        for i in range(d):
            for j in range(d):
                if i == j:
                    out[:, i, i] = ddval[:, i] * np.prod(np.delete(val, i, axis=1), axis=1)
                else:
                    rest = np.prod(np.delete(val, [i, j], axis=1), axis=1)
                    out[:, i, j] = dval[:, i] * dval[:, j] * rest
        return self.amplitude * out

    def lp_norm(self, p: float) -> float:
        # int_{-1}^{1} cos^{2p}(pi s / 2) ds = (2 / pi) B(1/2, p + 1/2)
        one_dim = self.half_width * (2.0 / np.pi) * special.beta(0.5, p + 0.5)
        return abs(self.amplitude) * one_dim ** (self.dim / p)

    @property
    def support_radius(self) -> float:
        return self.half_width * np.sqrt(self.dim)

    def scaled(self, factor: float) -> "TensorBump":
        return TensorBump(self.center, self.half_width, self.amplitude * factor)

    def dilated(self, factor: float) -> "TensorBump":
        return TensorBump(self.center, self.half_width * factor, self.amplitude)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "half_width": self.half_width}


@dataclass
class TestFunctionFamily:
    """A finite family of test functions sharing one exponent p."""

    __test__ = False

    members: List[TestFunction]
    p: float
    norms: List[float] = field(init=False)

    def __post_init__(self) -> None:
        if not self.members:
            raise DegenerateFamilyError("test-function family is empty")
        if self.p < 1.0:
            raise PreconditionError(f"exponent p must be >= 1, got {self.p}")
        self.norms = [m.lp_norm(self.p) for m in self.members]
        if all(n == 0.0 for n in self.norms):
            raise DegenerateFamilyError("every member of the family is identically zero")

    def __iter__(self) -> Iterator[TestFunction]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def scaled(self, factor: float) -> "TestFunctionFamily":
        return TestFunctionFamily([m.scaled(factor) for m in self.members], self.p)

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "members": [m.to_dict() for m in self.members], "norms": self.norms}


def gaussian_ladder(
    center: Sequence[float],
    widths: Optional[Sequence[float]] = None,
    p: float = 2.0,
) -> TestFunctionFamily:
    """Gaussians of geometrically spaced widths around one centre."""
    if widths is None:
        widths = 0.25 * np.sqrt(2.0) ** np.arange(6)
    return TestFunctionFamily([Gaussian(center, w) for w in widths], p)


def default_family(dim: int = 3, p: float = 2.0, center: Optional[Sequence[float]] = None) -> TestFunctionFamily:
    """One of each kind, unit scale, around `center` (default the origin)."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    return TestFunctionFamily(
        [Gaussian(c, 0.5), IndicatorBall(c, 1.0), TensorBump(c, 0.75)],
        p,
    )
