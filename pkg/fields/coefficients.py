"""
Coefficient sets (sigma, b) and the scalar/matrix fields derived from them.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from errors import PreconditionError
from fields.base import SINGULAR_TOL, ConstantField, Field, FieldKind, FieldTraits, as_points
from fields.example import ExampleParams, example_drift, example_sigma
from fields.mollify import MollifierSpec
from logging_config import get_logger

logger = get_logger(__name__)


@dataclass
class CoefficientSet:
    """
    Diffusion sigma (d x d1 matrix field) and drift b (vector field).

    The invariants d1 >= d >= 3 and 0 < delta <= 1 are checked on
    construction; the eigenvalue bound on a = sigma sigma^T is a sampled
    property, checked with `check_ellipticity`.
    """

    sigma: Field
    drift: Field
    delta: float = 0.4
    name: str = "custom"

    def __post_init__(self) -> None:
        if len(self.sigma.value_shape) != 2:
            raise PreconditionError("sigma must be a matrix field")
        d, d1 = self.sigma.value_shape
        if self.drift.value_shape != (d,) or self.drift.dim != d or self.sigma.dim != d:
            raise PreconditionError(f"drift must be a vector field on R^{d}")
        if not d1 >= d >= 3:
            raise PreconditionError(f"need d1 >= d >= 3, got d={d}, d1={d1}")
        if not 0.0 < self.delta <= 1.0:
            raise PreconditionError(f"delta must lie in (0, 1], got {self.delta}")

    @property
    def dim_d(self) -> int:
        return self.sigma.value_shape[0]

    @property
    def dim_d1(self) -> int:
        return self.sigma.value_shape[1]

    @property
    def singular_points(self) -> np.ndarray:
        pts = np.vstack([self.sigma.singular_points, self.drift.singular_points])
        return np.unique(pts, axis=0) if pts.size else pts

    @property
    def smooth(self) -> bool:
        return self.sigma.singular_points.size == 0 and self.drift.singular_points.size == 0

    def diffusion(self, x: Any) -> np.ndarray:
        """a(x) = sigma(x) sigma(x)^T."""
        s = self.sigma(x)
        return np.einsum("...ik,...jk->...ij", s, s)

    def ellipticity_range(self, points: Any) -> Tuple[float, float]:
        """Smallest and largest eigenvalue of a over the sample points."""
        pts, _ = as_points(points, self.dim_d)
        eig = np.linalg.eigvalsh(self.diffusion(pts))
        return float(eig.min()), float(eig.max())

    def check_ellipticity(self, points: Any, delta: Optional[float] = None) -> bool:
        """Whether all eigenvalues of a lie in [delta, 1/delta] at the samples."""
        delta = self.delta if delta is None else delta
        lo, hi = self.ellipticity_range(points)
        return lo >= delta * (1.0 - 1e-12) and hi <= (1.0 / delta) * (1.0 + 1e-12)

    def grad_sigma_norm(self, x: Any) -> np.ndarray:
        return grad_sigma_norm(self, x)

    def mollified(self, n: int, spec: Optional[MollifierSpec] = None) -> "CoefficientSet":
        """(sigma * zeta_n, b * zeta_n) with the same delta."""
        spec = spec if spec is not None else MollifierSpec(n=n)
        return CoefficientSet(
            sigma=self.sigma.mollified(spec),
            drift=self.drift.mollified(spec),
            delta=self.delta,
            name=f"mollified({self.name}, {spec.n})",
        )

    def permuted_columns(self, permutation: Sequence[int]) -> "CoefficientSet":
        """The same coefficients with the noise columns of sigma reordered."""
        return CoefficientSet(
            sigma=PermutedSigma(self.sigma, permutation),
            drift=self.drift,
            delta=self.delta,
            name=f"permuted({self.name})",
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "dim_d": self.dim_d,
            "dim_d1": self.dim_d1,
            "delta": self.delta,
            "sigma": self.sigma.to_dict(),
            "drift": self.drift.to_dict(),
        }


def grad_sigma_norm(coeffs: CoefficientSet, x: Any) -> np.ndarray:
    """
    |D sigma|(x) = (sum_{i,k,j} |d_j sigma^{ik}|^2)^{1/2}.

    Analytic when the field provides a derivative, centred differences with
    step 1e-5 max(1, |x|) otherwise; +inf at declared singular points.
    """
    pts, single = as_points(x, coeffs.dim_d)
    jac = coeffs.sigma.jacobian(pts)
    norms = np.sqrt(np.sum(jac.reshape(pts.shape[0], -1) ** 2, axis=1))
    norms[coeffs.sigma.near_singular(pts, SINGULAR_TOL)] = np.inf
    return norms[0] if single else norms


class GradSigmaNormField(Field):
    """x -> |D sigma|(x) as a scalar field (for Morrey norms of D sigma)."""

    traits = FieldTraits(kind=FieldKind.DERIVED, bounded=False)

    def __init__(self, coeffs: CoefficientSet) -> None:
        super().__init__(
            dim=coeffs.dim_d,
            singular_points=coeffs.sigma.singular_points,
            roi_center=coeffs.sigma.roi_center,
            roi_radius=coeffs.sigma.roi_radius,
        )
        self.coeffs = coeffs

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return grad_sigma_norm(self.coeffs, points)

    def describe(self) -> Dict[str, Any]:
        return {"of": self.coeffs.name}


class DiffusionField(Field):
    """x -> a(x) = sigma sigma^T as a matrix field (for oscillation)."""

    traits = FieldTraits(kind=FieldKind.DERIVED, bounded=True)

    def __init__(self, coeffs: CoefficientSet) -> None:
        d = coeffs.dim_d
        super().__init__(
            dim=d,
            value_shape=(d, d),
            singular_points=coeffs.sigma.singular_points,
            roi_center=coeffs.sigma.roi_center,
            roi_radius=coeffs.sigma.roi_radius,
        )
        self.coeffs = coeffs

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.coeffs.diffusion(points)

    def describe(self) -> Dict[str, Any]:
        return {"of": self.coeffs.name}


def example_coefficients(params: ExampleParams, delta: Optional[float] = None) -> CoefficientSet:
    """
    The explicit example as a coefficient set.

    a = (alpha^2 + beta^2) I, so unless given, delta is the largest value
    with the eigenvalue in [delta, 1/delta], capped at 1.
    """
    lam = params.ellipticity
    if delta is None:
        delta = min(1.0, lam, 1.0 / lam)
    return CoefficientSet(
        sigma=example_sigma(params),
        drift=example_drift(params),
        delta=delta,
        name="example",
    )


def constant_coefficients(
    dim: int = 3,
    noise_dim: Optional[int] = None,
    sigma: Optional[Any] = None,
    drift: Optional[Any] = None,
    delta: Optional[float] = None,
) -> CoefficientSet:
    """
    Constant sigma and b. Defaults: sigma = [I | 0], b = 0 (Brownian motion).
    """
    noise_dim = dim if noise_dim is None else noise_dim
    if sigma is None:
        sigma_arr = np.zeros((dim, noise_dim))
        sigma_arr[:, :dim] = np.eye(dim)
    else:
        sigma_arr = np.asarray(sigma, dtype=float)
        if sigma_arr.ndim == 0:
            scale = float(sigma_arr)
            sigma_arr = np.zeros((dim, noise_dim))
            sigma_arr[:, :dim] = scale * np.eye(dim)
    drift_arr = np.zeros(dim) if drift is None else np.asarray(drift, dtype=float)
    if delta is None:
        eig = np.linalg.eigvalsh(sigma_arr @ sigma_arr.T)
        delta = float(min(1.0, eig.min(), 1.0 / eig.max()))
    return CoefficientSet(
        sigma=ConstantField(sigma_arr, dim),
        drift=ConstantField(drift_arr, dim),
        delta=delta,
        name="constant",
    )


class PermutedSigma(Field):
    """sigma with its noise columns taken in the order of `permutation`."""

    traits = FieldTraits(kind=FieldKind.DERIVED, bounded=True, analytic_jacobian=True)

    def __init__(self, sigma: Field, permutation: Sequence[int]) -> None:
        d, d1 = sigma.value_shape
        perm = np.asarray(permutation, dtype=int)
        if sorted(perm.tolist()) != list(range(d1)):
            raise PreconditionError(f"not a permutation of the {d1} noise columns: {list(perm)}")
        super().__init__(
            dim=sigma.dim,
            value_shape=(d, d1),
            singular_points=sigma.singular_points,
            roi_center=sigma.roi_center,
            roi_radius=sigma.roi_radius,
        )
        self.inner = sigma
        self.permutation = perm

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.inner(points)[:, :, self.permutation]

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        return self.inner.jacobian(points)[:, :, self.permutation, :]

    def mollified(self, spec: MollifierSpec) -> "PermutedSigma":
        return PermutedSigma(self.inner.mollified(spec), self.permutation)

    def describe(self) -> Dict[str, Any]:
        return {"permutation": self.permutation.tolist(), "of": self.inner.to_dict()}
