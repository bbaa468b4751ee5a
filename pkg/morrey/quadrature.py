"""
Quasi-random quadrature over balls.

Nodes are scrambled Sobol points mapped into the ball in polar coordinates
around a pole, with radius R(theta) u^s. The pole is the ball centre, or the
nearest declared singular point inside the ball. With s = 1/(d - q) the
weighting makes |x - pole|^{-q} integrate exactly, which is what the Morrey
and embedding integrands look like near the fields' singular points.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats
from scipy.stats import qmc

from morrey.balls import Ball

DEFAULT_NODES = 1 << 14


@dataclass
class BallRule:
    """Nodes and weights such that mean(weights * f(points)) is the ball average."""

    points: np.ndarray
    weights: np.ndarray
    pole: np.ndarray
    radial_exponent: float

    def average(self, values: np.ndarray) -> "tuple[float, int]":
        """
        Weighted average of per-node values, skipping non-finite nodes.

        Returns:
            (average, number of excluded nodes)
        """
        finite = np.isfinite(values)
        excluded = int(values.size - finite.sum())
        if finite.sum() == 0:
            return float("nan"), excluded
        return float(np.sum(self.weights[finite] * values[finite]) / finite.sum()), excluded


def _sobol(dim: int, nodes: int, seed: int) -> np.ndarray:
    m = int(np.ceil(np.log2(max(nodes, 2))))
    return qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)


def _directions(u: np.ndarray) -> np.ndarray:
    g = stats.norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return g / norms


def pick_pole(ball: Ball, singular_points: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Nearest declared singular point strictly inside the ball, if any."""
    if singular_points is None or singular_points.shape[0] == 0:
        return None
    dist = np.linalg.norm(singular_points - ball.center_array, axis=1)
    inside = dist < ball.radius
    if not inside.any():
        return None
    return singular_points[np.argmin(np.where(inside, dist, np.inf))]


def ball_rule(
    ball: Ball,
    nodes: int = DEFAULT_NODES,
    singular_points: Optional[np.ndarray] = None,
    exponent: Optional[float] = None,
    salt: int = 0,
) -> BallRule:
    """
    Quadrature rule for averages over `ball`.

    Args:
        ball: Integration ball.
        nodes: Node count (rounded up to a power of two).
        singular_points: Declared singular points of the integrand.
        exponent: Expected singularity order q of |x - pole|^{-q}; selects the
            radial exponent s = 1/(d - q) when a singular point is inside.
        salt: Extra seed material, for independent node sets on one ball.
    """
    d = ball.dim
    u = _sobol(d + 1, nodes, ball.seed(salt))
    theta = _directions(u[:, :d])
    radial = np.clip(u[:, d], 1e-300, 1.0)

    pole = pick_pole(ball, singular_points)
    if pole is None:
        pole = ball.center_array
        s = 1.0 / d
        reach = np.full(theta.shape[0], ball.radius)
    else:
        if exponent is None:
            s = 1.0 / d
        else:
            gap = d - exponent
            s = 1.0 / gap if gap > 0.0 else 1.0
        # distance from the pole to the sphere along each direction
        offset = pole - ball.center_array
        proj = theta @ offset
        reach = -proj + np.sqrt(np.maximum(proj ** 2 - offset @ offset + ball.radius ** 2, 0.0))

    t = reach * radial ** s
    points = pole + t[:, None] * theta
    weights = s * d * (reach / ball.radius) ** d * radial ** (s * d - 1.0)
    return BallRule(points=points, weights=weights, pole=pole, radial_exponent=s)


def ball_mean(
    integrand,
    ball: Ball,
    nodes: int = DEFAULT_NODES,
    singular_points: Optional[np.ndarray] = None,
    exponent: Optional[float] = None,
) -> "tuple[float, int]":
    """Average of `integrand` (a callable on (m, d) arrays) over the ball."""
    rule = ball_rule(ball, nodes, singular_points, exponent)
    return rule.average(np.asarray(integrand(rule.points), dtype=float))


def ball_integral(
    integrand,
    ball: Ball,
    nodes: int = DEFAULT_NODES,
    singular_points: Optional[np.ndarray] = None,
    exponent: Optional[float] = None,
) -> "tuple[float, int]":
    """Integral of `integrand` over the ball (average times volume)."""
    mean, excluded = ball_mean(integrand, ball, nodes, singular_points, exponent)
    return mean * ball.volume, excluded
