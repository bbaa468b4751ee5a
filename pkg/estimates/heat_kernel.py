"""
Heat-kernel type bounds on E|f(x_t)| and its Laplace transform in t.

    E|f(x_t)| <= N (t ^ 1)^{-d/(2p)} ||f||_p
    int_0^inf e^{-lambda t} E|f(x_t)| dt <= N lambda^{(d+2)/(2p) - 1} ||f||
"""

from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate

from errors import PreconditionError
from estimates.family import TestFunctionFamily
from estimates.fitting import log_log, max_ratio
from estimates.types import EstimateReport, Probe, Verdict, mean_and_se
from logging_config import get_logger
from sde.types import TrajectoryBatch

logger = get_logger(__name__)

SLOPE_TOLERANCE = 0.15
# e^{-lambda T} above this leaves a visible tail beyond the simulated horizon.
TRUNCATION_LIMIT = 1e-3
DEFAULT_TIMES = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0)


def _check_exponent(p: float, d: int, q: Optional[float]) -> None:
    if p <= d / 2.0 or (q is not None and p >= q):
        raise PreconditionError(f"p must lie in (d/2, q), got p={p}, d={d}, q={q}")


def _nearest_records(batch: TrajectoryBatch, times: Sequence[float]) -> List[int]:
    idx = []
    for t in times:
        i = int(np.argmin(np.abs(batch.times - t)))
        if not np.isclose(batch.times[i], t, rtol=1e-6, atol=1e-9):
            raise PreconditionError(f"probe time {t} is not on the recorded grid")
        idx.append(i)
    return idx


def abs_expectations(batch: TrajectoryBatch, f, record_indices: Sequence[int]) -> "tuple[np.ndarray, np.ndarray]":
    """E|f(x_t)| and its standard error at the given record indices."""
    paths = batch.alive_paths()
    d = paths.shape[2]
    means, ses = [], []
    for i in record_indices:
        mean, se = mean_and_se(np.abs(f(paths[:, i].reshape(-1, d))))
        means.append(mean)
        ses.append(se)
    return np.asarray(means), np.asarray(ses)


def heat_kernel_bound_check(
    batch: TrajectoryBatch,
    family: TestFunctionFamily,
    times: Sequence[float] = DEFAULT_TIMES,
    q: Optional[float] = None,
) -> EstimateReport:
    """
    Fit N in E|f(x_t)| <= N (t ^ 1)^{-d/(2p)} ||f||_p over the family and times.

    Besides the worst ratio, the worst-case normalised expectation
    sup_f E|f(x_t)| / ||f||_p is fitted log-log against t < 1; its slope must
    not fall below -d/(2p) by more than 0.15. Fewer than three probe times
    below 1 leave the slope unresolved and the verdict inconclusive.
    """
    d, p = batch.dim, family.p
    _check_exponent(p, d, q)
    times = [t for t in times if 0.0 < t <= batch.config.T + 1e-12]
    if not times:
        raise PreconditionError("no probe time inside the simulated horizon")
    indices = _nearest_records(batch, times)

    report = EstimateReport(name="heat-kernel", bound_shape="N (t ^ 1)^(-d/(2p)) ||f||_p", tolerance=SLOPE_TOLERANCE)
    worst = np.zeros(len(times))
    for k, (f, norm) in enumerate(zip(family, family.norms)):
        means, ses = abs_expectations(batch, f, indices)
        for t, mean, se in zip(times, means, ses):
            report.probes.append(
                Probe(
                    label=f"f{k},t={t:g}",
                    lhs=float(mean),
                    se=float(se),
                    bound=min(t, 1.0) ** (-d / (2.0 * p)) * norm,
                    params={"t": t, "member": k},
                )
            )
        if norm > 0:
            worst = np.maximum(worst, means / norm)

    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    early = [(t, w) for t, w in zip(times, worst) if t < 1.0]
    fit = log_log([t for t, _ in early], [w for _, w in early])
    target = -d / (2.0 * p)
    report.fits.update({"small_time_slope": fit.slope, "slope_floor": target, "worst_normalised": worst})
    if batch.dead_count:
        report.flag("dead_paths")

    if fit.n < 3 or not fit.usable:
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "fewer than three resolved probe times below t = 1"
    elif fit.slope >= target - SLOPE_TOLERANCE and np.isfinite(report.fitted_constant):
        report.verdict = Verdict.PASS
    else:
        report.verdict = Verdict.FAIL
    logger.info(
        "Heat kernel check finished",
        extra={"slope": fit.slope, "floor": target, "verdict": report.verdict.value},
    )
    return report


def resolvent_bound_check(
    batch: TrajectoryBatch,
    family: TestFunctionFamily,
    lambdas: Sequence[float] = (1.0, 2.0, 4.0, 8.0, 16.0),
    q: Optional[float] = None,
) -> EstimateReport:
    """
    Laplace transform of t -> E|f(x_t)| against N lambda^{(d+2)/(2p) - 1} ||f||.

    The time integral is the trapezoid rule on the recorded grid, truncated at
    the horizon T (flagged when e^{-lambda T} > 1e-3). A time-independent f on
    (0, T) has space-time norm T^{1/p} ||f||_p. The log-log slope in lambda
    of every member must not exceed the bound's exponent by more than 0.15.
    """
    d, p = batch.dim, family.p
    _check_exponent(p, d, q)
    T = float(batch.times[-1])
    exponent = (d + 2.0) / (2.0 * p) - 1.0
    truncated = any(np.exp(-lam * T) > TRUNCATION_LIMIT for lam in lambdas)
    if truncated:
        logger.warning("Resolvent integral truncated at the horizon", extra={"T": T, "lambdas": list(lambdas)})

    report = EstimateReport(
        name="resolvent",
        bound_shape="N lambda^((d+2)/(2p) - 1) T^(1/p) ||f||_p",
        tolerance=SLOPE_TOLERANCE,
    )
    if truncated:
        report.flag("truncation")
    all_indices = list(range(batch.times.size))
    slopes: Dict[str, float] = {}
    for k, (f, norm) in enumerate(zip(family, family.norms)):
        means, _ = abs_expectations(batch, f, all_indices)
        values = []
        for lam in lambdas:
            value = float(integrate.trapezoid(np.exp(-lam * batch.times) * means, batch.times))
            values.append(value)
            report.probes.append(
                Probe(
                    label=f"f{k},lambda={lam:g}",
                    lhs=value,
                    bound=lam ** exponent * T ** (1.0 / p) * norm,
                    params={"lambda": lam, "member": k},
                )
            )
        fit = log_log(lambdas, values)
        slopes[f"f{k}"] = fit.slope if fit.usable else float("nan")

    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    report.fits.update({"lambda_slope": slopes, "slope_ceiling": exponent})
    finite = [s for s in slopes.values() if np.isfinite(s)]
    if not finite:
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "no usable lambda fit"
    else:
        report.verdict = Verdict.PASS if max(finite) <= exponent + SLOPE_TOLERANCE else Verdict.FAIL
    return report
