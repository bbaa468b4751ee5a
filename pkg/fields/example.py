"""
The explicit three-dimensional example with twelve noise columns.

sigma(x) = [alpha I | beta X(x)/|x|], where row i of the 3x9 block X holds
x/|x| in its own three-column slot, and

    b(x) = -(gamma/|x|) x/|x| on 0 < |x| <= 1, plus a bounded field bhat.

The rows of the beta block are orthogonal with equal norm, so
a = sigma sigma^T = (alpha^2 + beta^2) I everywhere, the origin included.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from fields.base import Field, FieldKind, FieldTraits
from fields.radial import InverseProfile, RadialVectorField

EXAMPLE_DIM = 3
EXAMPLE_NOISE_DIM = 12


@dataclass(frozen=True)
class ExampleParams:
    """Parameters of the explicit example."""

    alpha: float = 1.0
    beta: float = 0.3
    gamma: float = 0.1
    bhat: Optional[Field] = None

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("alpha, beta and gamma must be nonnegative")
        if self.alpha ** 2 + self.beta ** 2 <= 0:
            raise ValueError("alpha^2 + beta^2 must be positive")
        if self.bhat is not None:
            if self.bhat.dim != EXAMPLE_DIM or self.bhat.value_shape != (EXAMPLE_DIM,):
                raise ValueError("bhat must be a vector field on R^3")
            if not self.bhat.traits.bounded:
                raise ValueError("bhat must be a bounded field")

    @property
    def ellipticity(self) -> float:
        """The constant eigenvalue alpha^2 + beta^2 of a."""
        return self.alpha ** 2 + self.beta ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "bhat": None if self.bhat is None else self.bhat.to_dict(),
        }


class ExampleSigma(Field):
    """The 3x12 example diffusion, built on a radial unit field."""

    traits = FieldTraits(kind=FieldKind.EXAMPLE, bounded=True, analytic_jacobian=True)

    def __init__(self, alpha: float, beta: float, unit: Optional[RadialVectorField] = None) -> None:
        unit = unit if unit is not None else RadialVectorField.unit(EXAMPLE_DIM)
        singular = unit.singular_points if beta != 0.0 else None
        super().__init__(
            dim=EXAMPLE_DIM,
            value_shape=(EXAMPLE_DIM, EXAMPLE_NOISE_DIM),
            singular_points=singular,
        )
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.unit = unit

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        n = points.shape[0]
        u = self.unit(points)
        out = np.zeros((n, EXAMPLE_DIM, EXAMPLE_NOISE_DIM))
        for i in range(EXAMPLE_DIM):
            out[:, i, i] = self.alpha
            slot = EXAMPLE_DIM + EXAMPLE_DIM * i
            out[:, i, slot:slot + EXAMPLE_DIM] = self.beta * u
        return out

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        n = points.shape[0]
        jac = np.zeros((n, EXAMPLE_DIM, EXAMPLE_NOISE_DIM, EXAMPLE_DIM))
        if self.beta == 0.0:
            return jac
        du = self.unit.jacobian(points)
        for i in range(EXAMPLE_DIM):
            slot = EXAMPLE_DIM + EXAMPLE_DIM * i
            jac[:, i, slot:slot + EXAMPLE_DIM, :] = self.beta * du
        return jac

    def mollified(self, spec: Any) -> "ExampleSigma":
        # sigma is affine in the unit field and the kernel has unit mass
        return ExampleSigma(self.alpha, self.beta, unit=self.unit.mollified(spec))

    def describe(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "beta": self.beta, **self.unit.describe()}


class ExampleDrift(Field):
    """Radial singular drift plus an optional bounded perturbation."""

    traits = FieldTraits(kind=FieldKind.EXAMPLE, bounded=False, analytic_jacobian=True)

    def __init__(self, radial: RadialVectorField, bhat: Optional[Field] = None, gamma: float = 0.0) -> None:
        super().__init__(
            dim=EXAMPLE_DIM,
            value_shape=(EXAMPLE_DIM,),
            singular_points=radial.singular_points,
        )
        self.radial = radial
        self.bhat = bhat
        self.gamma = float(gamma)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        out = self.radial(points)
        if self.bhat is not None:
            out = out + self.bhat(points)
        return out

    def _jacobian(self, points: np.ndarray) -> np.ndarray:
        jac = self.radial.jacobian(points)
        if self.bhat is not None:
            jac = jac + self.bhat.jacobian(points)
        return jac

    def mollified(self, spec: Any) -> "ExampleDrift":
        bhat = None if self.bhat is None else self.bhat.mollified(spec)
        return ExampleDrift(self.radial.mollified(spec), bhat=bhat, gamma=self.gamma)

    def describe(self) -> Dict[str, Any]:
        return {"gamma": self.gamma, **self.radial.describe(), "bhat": self.bhat is not None}


def example_sigma(params: ExampleParams) -> ExampleSigma:
    """The example diffusion matrix field for `params`."""
    return ExampleSigma(params.alpha, params.beta)


def example_drift(params: ExampleParams) -> ExampleDrift:
    """The example drift for `params`; at the origin it equals bhat(0)."""
    radial = RadialVectorField(EXAMPLE_DIM, InverseProfile(params.gamma, cutoff=1.0))
    return ExampleDrift(radial, bhat=params.bhat, gamma=params.gamma)
