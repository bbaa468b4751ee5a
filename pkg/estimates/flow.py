"""
Lower bound for the squared directional derivative along the derivative flow.

    E [f_(eta_t)(x_t)]^2 >= [(T_t f)_(eta)(x)]^2

The right side is the m = 0 term of the expansion; it comes from a semigroup
handle that can differentiate T_t f in space.
"""

from typing import Optional, Protocol, Sequence

import numpy as np

from errors import PreconditionError
from estimates.family import TestFunction
from estimates.types import SE_MARGIN, EstimateReport, Probe, Verdict, mean_and_se
from logging_config import get_logger
from sde.types import DerivativeFlowBatch

logger = get_logger(__name__)


class GradientSource(Protocol):
    """Anything that evaluates D T_t f at points."""

    def gradient(self, t: float, x: np.ndarray) -> np.ndarray: ...


def _states_at(flow: DerivativeFlowBatch, t: float, index: int) -> "tuple[np.ndarray, np.ndarray]":
    """(x_t, eta_t) on alive paths for the index-th initial eta."""
    alive = flow.alive
    if np.isclose(t, flow.times[-1]):
        return flow.terminal[alive], flow.eta_terminal[index][alive]
    if flow.paths is None or flow.eta_paths is None:
        raise PreconditionError(f"time {t} needs stored paths; only the terminal time is available")
    k = int(np.argmin(np.abs(flow.times - t)))
    if not np.isclose(flow.times[k], t, rtol=1e-9, atol=1e-12):
        raise PreconditionError(f"time {t} is not on the recorded grid")
    return flow.paths[alive, k], flow.eta_paths[index][alive, k]


def flow_lower_bound_check(
    flow: DerivativeFlowBatch,
    handle: GradientSource,
    f: TestFunction,
    times: Optional[Sequence[float]] = None,
) -> EstimateReport:
    """
    Compare E (eta_t . Df(x_t))^2 with (eta . D T_t f(x))^2 for every initial
    eta of the flow and every probe time.

    Passes when every left side is at least the right side minus three
    standard errors. A probe whose standard error exceeds a positive right
    side cannot separate the two and makes the report inconclusive.
    """
    times = [float(flow.times[-1])] if times is None else list(times)
    x0 = flow.start
    report = EstimateReport(name="flow-lower-bound", bound_shape="[(T_t f)_(eta)(x)]^2")
    if flow.dead_count:
        report.flag("dead_paths")

    violated = False
    noisy = False
    for t in times:
        grad_tf = np.asarray(handle.gradient(t, x0), dtype=float).reshape(-1)
        for m, eta0 in enumerate(flow.eta_starts):
            x_t, eta_t = _states_at(flow, t, m)
            directional = np.einsum("ni,ni->n", eta_t, f.gradient(x_t))
            lhs, se = mean_and_se(directional ** 2)
            rhs = float(np.dot(eta0, grad_tf) ** 2)
            report.probes.append(
                Probe(
                    label=f"t={t:g},eta={m}",
                    lhs=lhs,
                    se=se,
                    bound=rhs,
                    params={"t": t, "eta": [float(v) for v in eta0], "k0": flow.k0},
                )
            )
            if lhs < rhs - SE_MARGIN * se:
                violated = True
            elif rhs > 0 and se > rhs:
                noisy = True

    margins = [pr.lhs - pr.bound for pr in report.probes]
    report.fitted_constant = float(min(margins)) if margins else float("nan")
    report.fits["min_margin"] = report.fitted_constant
    if violated:
        report.verdict = Verdict.FAIL
    elif noisy:
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "standard error exceeds the right side"
    else:
        report.verdict = Verdict.PASS
    logger.info(
        "Derivative-flow lower bound check finished",
        extra={"probes": len(report.probes), "min_margin": report.fitted_constant, "verdict": report.verdict.value},
    )
    return report
