"""
Mean oscillation of matrix fields.

    osc(a, B) = |B|^{-2} int_B int_B |a(y) - a(z)| dy dz

estimated with paired quasi-random nodes (y_i, z_i) drawn from one Sobol set
in 2(d + 1) dimensions, and its sharp version a_r^# as a sup over sampled
balls of radius at most r.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from estimates.fitting import max_ratio
from estimates.types import EstimateReport, Probe, Verdict, relative_spread
from fields.base import Field
from logging_config import get_logger
from morrey.balls import Ball, radius_ladder
from morrey.norms import SearchBudget, candidate_balls
from morrey.quadrature import _directions, ball_rule

logger = get_logger(__name__)

DEFAULT_PAIRS = 1 << 12


def _pair_points(ball: Ball, pairs: int) -> Tuple[np.ndarray, np.ndarray]:
    d = ball.dim
    m = int(np.ceil(np.log2(max(pairs, 2))))
    u = qmc.Sobol(d=2 * (d + 1), scramble=True, seed=ball.seed(salt=1)).random_base2(m)

    def to_ball(block: np.ndarray) -> np.ndarray:
        theta = _directions(block[:, :d])
        r = ball.radius * np.clip(block[:, d], 0.0, 1.0) ** (1.0 / d)
        return ball.center_array + r[:, None] * theta

    return to_ball(u[:, : d + 1]), to_ball(u[:, d + 1:])


def _frobenius(values: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(values.reshape(values.shape[0], -1) ** 2, axis=1))


def oscillation(a_field: Field, ball: Ball, pairs: int = DEFAULT_PAIRS) -> float:
    """osc(a, B); pairs with a non-finite value are excluded."""
    y, z = _pair_points(ball, pairs)
    diffs = _frobenius(a_field(y) - a_field(z))
    finite = np.isfinite(diffs)
    if not finite.any():
        return float("nan")
    return float(diffs[finite].mean())


@dataclass
class OscillationReport:
    """Sharp oscillation a_r^# with its witness ball."""

    value: float
    horizon: float
    witness: Ball
    samples: List[Tuple[Ball, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "horizon": self.horizon,
            "witness": self.witness.to_dict(),
            "samples": len(self.samples),
        }


def sharp_oscillation(
    a_field: Field,
    r: float,
    search: Optional[SearchBudget] = None,
    pairs: int = DEFAULT_PAIRS,
) -> OscillationReport:
    """a_r^# = sup over sampled balls of radius rho <= r of osc(a, B)."""
    budget = search or SearchBudget()
    samples: List[Tuple[Ball, float]] = []
    for rho in radius_ladder(r, budget.depth):
        centers, _ = candidate_balls(a_field, float(rho), budget)
        for c in centers:
            ball = Ball.at(c, float(rho))
            samples.append((ball, oscillation(a_field, ball, pairs)))
    finite = [s for s in samples if np.isfinite(s[1])]
    witness, value = max(finite, key=lambda s: s[1]) if finite else (samples[0][0], float("nan"))
    logger.info(
        "Sharp oscillation estimated",
        extra={"value": value, "horizon": r, "witness_radius": witness.radius, "balls": len(samples)},
    )
    return OscillationReport(value=value, horizon=r, witness=witness, samples=samples)


def mean_gradient_norm(a_field: Field, ball: Ball, nodes: int = 1 << 12) -> float:
    """Average of |Da| over the ball."""
    rule = ball_rule(ball, nodes)
    jac = a_field.jacobian(rule.points)
    mean, _ = rule.average(_frobenius(jac))
    return mean


def poincare_check(
    fields: Sequence[Field],
    balls: Sequence[Ball],
    pairs: int = DEFAULT_PAIRS,
    tolerance: float = 0.5,
) -> EstimateReport:
    """
    osc(a, B) <= N rho (average of |Da| over B) for smooth a.

    N is fitted as the worst ratio over fields and balls; the check passes
    when the ratios stay within +-tolerance of their midrange, i.e. a single
    dimensional constant explains them all.
    """
    report = EstimateReport(
        name="poincare",
        bound_shape="N * rho * avg_B |Da|",
        tolerance=tolerance,
    )
    for fi, a_field in enumerate(fields):
        for ball in balls:
            lhs = oscillation(a_field, ball, pairs)
            bound = ball.radius * mean_gradient_norm(a_field, ball)
            report.probes.append(
                Probe(label=f"field{fi}", lhs=lhs, bound=bound, params={"radius": ball.radius})
            )
    lhs = [p.lhs for p in report.probes]
    bounds = [p.bound for p in report.probes]
    report.fitted_constant = max_ratio(lhs, bounds)
    ratios = [p.ratio for p in report.probes if p.bound and p.bound > 0]
    spread = relative_spread(ratios)
    report.fits["ratio_spread"] = spread
    if not np.isfinite(report.fitted_constant):
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "no probe with a nonzero gradient average"
    else:
        report.verdict = Verdict.PASS if spread <= tolerance else Verdict.FAIL
    return report
