"""
Ball averages and Morrey norms.

    ||f|| = sup over rho <= R0 and balls B of radius rho of
            rho (average over B of |f|^q)^{1/q}

A numerical sup is only ever a lower estimate. The search walks a radius
ladder R0 2^{-k}, tries lattice centres plus every declared singular point
(and half-radius offsets from it), then refines around the best ball. The
report carries a `coarse` flag when refinement moved the value by more than
1%, and a `thinned_lattice` flag when the centre lattice had to be capped.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from errors import PreconditionError
from fields.base import Field
from logging_config import get_logger
from morrey.balls import Ball, lattice_centers, radius_ladder, singular_centers
from morrey.quadrature import DEFAULT_NODES, ball_rule
from worker import WorkerPool

logger = get_logger(__name__)

REFINE_TOLERANCE = 0.01


@dataclass(frozen=True)
class SearchBudget:
    """Quadrature and search configuration for sup-type quantities."""

    nodes: int = DEFAULT_NODES
    depth: int = 12
    lattice_cap: int = 125
    singular_cap: int = 32
    refine_rounds: int = 3

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": self.nodes,
            "depth": self.depth,
            "lattice_cap": self.lattice_cap,
            "singular_cap": self.singular_cap,
            "refine_rounds": self.refine_rounds,
        }


@dataclass
class BallSample:
    ball: Ball
    value: float
    excluded: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {**self.ball.to_dict(), "value": self.value, "excluded": self.excluded}


@dataclass
class MorreyReport:
    """Estimated Morrey norm with its witness ball and the sampled balls."""

    value: float
    exponent_q: float
    horizon_R0: float
    witness: Ball
    samples: List[BallSample]
    budget: SearchBudget
    coarse: bool = False
    excluded_nodes: int = 0
    flags: List[str] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "radius": s.ball.radius,
                **{f"center_{i}": c for i, c in enumerate(s.ball.center)},
                "value": s.value,
                "excluded": s.excluded,
            }
            for s in self.samples
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "exponent_q": self.exponent_q,
            "horizon_R0": self.horizon_R0,
            "witness": self.witness.to_dict(),
            "samples": len(self.samples),
            "budget": self.budget.to_dict(),
            "coarse": self.coarse,
            "excluded_nodes": self.excluded_nodes,
            "flags": list(self.flags),
        }


def ball_power_mean(field: Field, ball: Ball, q: float, nodes: int = DEFAULT_NODES) -> Tuple[float, int]:
    """
    Average of |field|^q over the ball.

    Returns:
        (average, excluded node count). Non-finite nodes are excluded and the
        average taken over the remaining nodes.
    """
    rule = ball_rule(ball, nodes, field.singular_points, exponent=q)
    values = field.magnitude(rule.points) ** q
    return rule.average(values)


def ball_avg_norm(field: Field, ball: Ball, q: float, nodes: int = DEFAULT_NODES) -> float:
    """(average over B of |field|^q)^{1/q}; deterministic for a given node count."""
    if q < 1.0:
        raise PreconditionError(f"q must be >= 1, got {q}")
    mean, excluded = ball_power_mean(field, ball, q, nodes)
    if excluded:
        logger.debug("Excluded non-finite quadrature nodes", extra={"excluded": excluded, **ball.to_dict()})
    return float(mean ** (1.0 / q))


@dataclass
class _LevelTask:
    field: Field
    q: float
    rho: float
    centers: np.ndarray
    nodes: int


def _evaluate_level(task: _LevelTask) -> List[BallSample]:
    samples = []
    for c in task.centers:
        ball = Ball.at(c, task.rho)
        mean, excluded = ball_power_mean(task.field, ball, task.q, task.nodes)
        samples.append(BallSample(ball, task.rho * mean ** (1.0 / task.q), excluded))
    return samples


def candidate_balls(field: Field, rho: float, budget: SearchBudget) -> Tuple[np.ndarray, bool]:
    """Lattice centres plus singular-point centres for one radius."""
    lattice, thinned = lattice_centers(field.roi_center, field.roi_radius, rho, budget.lattice_cap)
    singular = singular_centers(field.singular_points, rho, budget.singular_cap)
    centers = np.vstack([lattice, singular]) if singular.size else lattice
    return centers, thinned


def _refine(
    field: Field,
    q: float,
    R0: float,
    best: BallSample,
    budget: SearchBudget,
) -> Tuple[BallSample, List[BallSample], float]:
    """Pattern search around the best ball; returns the new best, samples, last relative gain."""
    samples: List[BallSample] = []
    gain = 0.0
    step = best.ball.radius / 4.0
    for _ in range(budget.refine_rounds):
        c = best.ball.center_array
        rho = best.ball.radius
        trial_balls = []
        for j in range(c.size):
            e = np.zeros(c.size)
            e[j] = step
            trial_balls += [Ball.at(c + e, rho), Ball.at(c - e, rho)]
        for factor in (2.0 ** 0.5, 2.0 ** -0.5):
            trial_balls.append(Ball.at(c, min(R0, rho * factor)))
        round_best = best
        for ball in trial_balls:
            mean, excluded = ball_power_mean(field, ball, q, budget.nodes)
            sample = BallSample(ball, ball.radius * mean ** (1.0 / q), excluded)
            samples.append(sample)
            if sample.value > round_best.value:
                round_best = sample
        gain = (round_best.value - best.value) / best.value if best.value > 0 else 0.0
        best = round_best
        step /= 2.0
        if gain <= 0.0:
            break
    return best, samples, gain


def morrey_norm(
    field: Field,
    q: float,
    R0: float,
    search: Optional[SearchBudget] = None,
    pool: Optional[WorkerPool] = None,
) -> MorreyReport:
    """
    Lower estimate of the Morrey-q norm with horizon R0.

    Args:
        field: Scalar, vector or matrix field (its magnitude is used).
        q: Exponent in (1, d].
        R0: Largest admissible ball radius.
        search: Quadrature and search budget.
        pool: Optional worker pool; radius levels are evaluated in parallel.

    Raises:
        PreconditionError: q outside (1, d] or R0 not positive.
    """
    budget = search or SearchBudget()
    if not 1.0 < q <= field.dim:
        raise PreconditionError(f"q must lie in (1, d] = (1, {field.dim}], got {q}")
    if R0 <= 0:
        raise PreconditionError(f"R0 must be positive, got {R0}")

    thinned_any = False
    tasks = []
    for rho in radius_ladder(R0, budget.depth):
        centers, thinned = candidate_balls(field, rho, budget)
        thinned_any = thinned_any or thinned
        tasks.append(_LevelTask(field, q, float(rho), centers, budget.nodes))

    pool = pool or WorkerPool(1)
    levels = pool.map_ordered(_evaluate_level, tasks)
    samples = [s for level in levels for s in level]

    finite = [s for s in samples if np.isfinite(s.value)]
    best = max(finite, key=lambda s: s.value) if finite else samples[0]
    refined, extra, _ = _refine(field, q, R0, best, budget)
    samples.extend(extra)
    change = (refined.value - best.value) / best.value if best.value > 0 else 0.0
    coarse = change > REFINE_TOLERANCE
    flags = []
    if coarse:
        flags.append("coarse")
    if thinned_any:
        flags.append("thinned_lattice")

    excluded = sum(s.excluded for s in samples)
    if excluded:
        flags.append("excluded_nodes")

    report = MorreyReport(
        value=refined.value,
        exponent_q=q,
        horizon_R0=R0,
        witness=refined.ball,
        samples=samples,
        budget=budget,
        coarse=coarse,
        excluded_nodes=excluded,
        flags=flags,
    )
    logger.info(
        "Morrey norm estimated",
        extra={
            "value": report.value,
            "q": q,
            "R0": R0,
            "witness_radius": refined.ball.radius,
            "balls": len(samples),
            "flags": flags,
        },
    )
    return report
