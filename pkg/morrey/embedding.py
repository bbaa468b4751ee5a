"""
Embedding inequalities as fitted-constant checks.

    int |b|^p |u|^p  <=  N ||b||^p ( int |Du|^p + R0^{-p} int |u|^p )

for smooth compactly supported u, and the mollifier bound
||b * zeta_n|| <= N ||b|| uniformly in n. The constants are not computable,
so each check reports the smallest N that fits the probes and passes when N
is stable across them.
"""

from typing import List, Optional, Sequence

import numpy as np

from errors import PreconditionError
from estimates.family import TestFunction, TestFunctionFamily, gaussian_ladder
from estimates.fitting import max_ratio
from estimates.types import EstimateReport, Probe, Verdict, relative_spread
from fields.base import Field
from fields.mollify import MollifierSpec
from logging_config import get_logger
from morrey.balls import Ball
from morrey.norms import SearchBudget, morrey_norm
from morrey.quadrature import DEFAULT_NODES, ball_integral
from worker import WorkerPool

logger = get_logger(__name__)

EMBEDDING_TOLERANCE = 0.2
MOLLIFIER_TOLERANCE = 0.25
DEFAULT_SCALES = (2, 4, 8, 16)


def default_p(dim: int, q: float) -> float:
    """p = (d/2 + 1 + q) / 2, the midpoint of (d/2 + 1, q)."""
    return 0.5 * (dim / 2.0 + 1.0 + q)


def dilation_family(u: TestFunction, factors: Sequence[float] = (0.5, 1.0, 2.0), p: float = 2.0) -> TestFunctionFamily:
    """One test function dilated by each factor."""
    return TestFunctionFamily([u.dilated(f) for f in factors], p)


def _support_ball(u: TestFunction) -> Ball:
    return Ball.at(u.center, u.support_radius)


def weighted_integral(b_field: Field, u: TestFunction, p: float, nodes: int = DEFAULT_NODES) -> float:
    """int |b|^p |u|^p over the support of u, singular-centred."""
    ball = _support_ball(u)
    value, _ = ball_integral(
        lambda x: b_field.magnitude(x) ** p * np.abs(u(x)) ** p,
        ball,
        nodes,
        b_field.singular_points,
        exponent=p,
    )
    return value


def gradient_integral(u: TestFunction, p: float, nodes: int = DEFAULT_NODES) -> float:
    """int |Du|^p over the support of u."""
    value, _ = ball_integral(
        lambda x: np.linalg.norm(u.gradient(x), axis=1) ** p,
        _support_ball(u),
        nodes,
    )
    return value


def embedding_check(
    b_field: Field,
    q: float,
    p: Optional[float] = None,
    R0: float = 1.0,
    family: Optional[TestFunctionFamily] = None,
    search: Optional[SearchBudget] = None,
    pool: Optional[WorkerPool] = None,
    b_norm: Optional[float] = None,
) -> EstimateReport:
    """
    Fit N in the embedding inequality over a test-function family.

    Args:
        b_field: Drift-like field (its magnitude is used).
        q: Morrey exponent.
        p: Integrability exponent, 1 < p < q <= d. Defaults to default_p.
        R0: Morrey horizon.
        family: Smooth test functions with gradients; defaults to a unit
            Gaussian around the field's region of interest dilated by 1/2, 1, 2.
        b_norm: Precomputed Morrey norm of b_field, skipping the search.

    Raises:
        PreconditionError: Exponents out of range or a member without a gradient.
    """
    d = b_field.dim
    p = default_p(d, q) if p is None else p
    if not 1.0 < p < q <= d:
        raise PreconditionError(f"need 1 < p < q <= d, got p={p}, q={q}, d={d}")
    budget = search or SearchBudget()
    if family is None:
        family = gaussian_ladder(b_field.roi_center, widths=[0.25, 0.5, 1.0], p=p)

    if b_norm is None:
        b_norm = morrey_norm(b_field, q, R0, budget, pool).value

    report = EstimateReport(
        name="embedding",
        bound_shape="N ||b||^p (int |Du|^p + R0^-p int |u|^p)",
        tolerance=EMBEDDING_TOLERANCE,
    )
    report.fits["morrey_norm"] = b_norm
    report.fits["p"] = p

    for i, u in enumerate(family):
        try:
            grad = gradient_integral(u, p, budget.nodes)
        except NotImplementedError as exc:
            raise PreconditionError(f"test function {i} has no gradient: {exc}") from exc
        lhs = weighted_integral(b_field, u, p, budget.nodes)
        mass = u.lp_norm(p) ** p
        bound = b_norm ** p * (grad + R0 ** -p * mass)
        report.probes.append(
            Probe(
                label=f"u{i}",
                lhs=lhs,
                bound=bound,
                params={"support_radius": u.support_radius, "grad_integral": grad, "mass": mass},
            )
        )

    if b_norm == 0.0:
        report.fitted_constant = 0.0
        report.verdict = Verdict.PASS
        report.message = "b vanishes; every N fits"
        return report

    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    spread = relative_spread([pr.ratio for pr in report.probes])
    report.fits["ratio_spread"] = spread
    if not np.isfinite(report.fitted_constant):
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "no finite ratio"
    else:
        report.verdict = Verdict.PASS if spread <= EMBEDDING_TOLERANCE else Verdict.FAIL
    logger.info(
        "Embedding check finished",
        extra={"fitted_constant": report.fitted_constant, "spread": spread, "verdict": report.verdict.value},
    )
    return report


def mollifier_bound_check(
    b_field: Field,
    q: float,
    R0: float = 1.0,
    ns: Sequence[int] = DEFAULT_SCALES,
    search: Optional[SearchBudget] = None,
    pool: Optional[WorkerPool] = None,
) -> EstimateReport:
    """
    Ratios ||b * zeta_n|| / ||b|| over mollification scales.

    The fitted N is the largest ratio; the check passes when the ratios stay
    within +-25% of their midrange.
    """
    budget = search or SearchBudget()
    base = morrey_norm(b_field, q, R0, budget, pool)
    report = EstimateReport(
        name="mollifier-bound",
        bound_shape="N(d, q) ||b||",
        tolerance=MOLLIFIER_TOLERANCE,
    )
    report.fits["base_norm"] = base.value
    if base.coarse:
        report.flag("coarse")

    for n in ns:
        mollified = b_field.mollified(MollifierSpec(n=int(n)))
        value = morrey_norm(mollified, q, R0, budget, pool)
        if value.coarse:
            report.flag("coarse")
        report.probes.append(Probe(label=f"n={n}", lhs=value.value, bound=base.value, params={"n": int(n)}))

    if base.value == 0.0:
        report.fitted_constant = 0.0
        report.verdict = Verdict.PASS
        report.message = "b vanishes"
        return report

    ratios = [pr.ratio for pr in report.probes]
    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    spread = relative_spread(ratios)
    report.fits["ratio_spread"] = spread
    report.verdict = Verdict.PASS if spread <= MOLLIFIER_TOLERANCE else Verdict.FAIL
    logger.info(
        "Mollifier bound check finished",
        extra={"fitted_constant": report.fitted_constant, "spread": spread, "scales": list(ns)},
    )
    return report


def mollified_weighted_check(
    b_field: Field,
    u: TestFunction,
    p: float,
    ns: Sequence[int] = DEFAULT_SCALES,
    nodes: int = DEFAULT_NODES,
) -> EstimateReport:
    """
    int |b_n - b|^p |u|^p over increasing n.

    Convergence to zero is the claim; the check passes when the last value is
    below the first and flags a non-monotone sequence without failing on it.
    """
    report = EstimateReport(name="mollified-weighted", bound_shape="-> 0 as n grows")
    values: List[float] = []
    for n in ns:
        smooth = b_field.mollified(MollifierSpec(n=int(n)))

        def integrand(x: np.ndarray, smooth: Field = smooth) -> np.ndarray:
            diff = np.asarray(smooth(x) - b_field(x)).reshape(x.shape[0], -1)
            return np.linalg.norm(diff, axis=1) ** p * np.abs(u(x)) ** p

        value, _ = ball_integral(integrand, _support_ball(u), nodes, b_field.singular_points, exponent=p)
        values.append(value)
        report.probes.append(Probe(label=f"n={n}", lhs=value, params={"n": int(n)}))

    finite = [v for v in values if np.isfinite(v)]
    if len(finite) < 2:
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "fewer than two finite values"
        return report
    if any(later > earlier for earlier, later in zip(finite, finite[1:])):
        report.flag("non_monotone")
    report.fitted_constant = finite[-1] / finite[0] if finite[0] > 0 else 0.0
    report.fits["last_over_first"] = report.fitted_constant
    report.verdict = Verdict.PASS if finite[-1] <= finite[0] else Verdict.FAIL
    return report
