"""Increment moments of the paths and the Ito formula at smooth-test level."""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from errors import PreconditionError
from estimates.family import TestFunction
from estimates.fitting import log_log
from estimates.types import SE_MARGIN, EstimateReport, Probe, Verdict, mean_and_se, relative_spread
from fields.coefficients import CoefficientSet
from logging_config import get_logger
from sde.types import TrajectoryBatch

logger = get_logger(__name__)

INCREMENT_TOLERANCE = 0.15
EXPONENT_TOLERANCE = 0.2
ITO_ABS_TOLERANCE = 1e-3


def default_pairs() -> Tuple[Tuple[float, float], ...]:
    return tuple((0.0, 2.0 ** -k) for k in range(6, 1, -1))


def _record_index(times: np.ndarray, t: float) -> int:
    idx = int(np.argmin(np.abs(times - t)))
    if not np.isclose(times[idx], t, rtol=1e-9, atol=1e-12):
        raise PreconditionError(f"time {t} is not on the recorded grid")
    return idx


def sup_increments(batch: TrajectoryBatch, s: float, t: float) -> np.ndarray:
    """Per-path sup_{r in [s, t]} |x_r - x_s| over the recorded grid, alive paths."""
    paths = batch.alive_paths()
    i, j = _record_index(batch.times, s), _record_index(batch.times, t)
    if j <= i:
        return np.zeros(paths.shape[0])
    window = paths[:, i : j + 1] - paths[:, i : i + 1]
    return np.max(np.linalg.norm(window, axis=2), axis=1)


def increment_moment_check(
    batch: TrajectoryBatch,
    m_list: Sequence[float] = (2, 4),
    pairs: Optional[Sequence[Tuple[float, float]]] = None,
    tolerance: float = INCREMENT_TOLERANCE,
) -> EstimateReport:
    """
    E sup_{r in [s,t]} |x_r - x_s|^m against N (h^{m/2} + h^m), h = t - s.

    The fitted N for each m is the worst ratio; it passes when the ratios for
    each m stay within +-tolerance of their midrange over the probed gaps.
    The log-log exponent of h is reported per m, together with how far the
    larger moments' exponents are from the m/2 scaling of the smallest one.
    scaling_spread holds the spread of E sup^m / h^{m/2}, which is flat for
    Brownian motion.
    """
    pairs = default_pairs() if pairs is None else pairs
    for s, t in pairs:
        if not 0.0 <= s <= t <= batch.config.T + 1e-12:
            raise PreconditionError(f"pair ({s}, {t}) outside [0, {batch.config.T}]")
    batch.require_paths()

    report = EstimateReport(
        name="increments",
        bound_shape="N (h^(m/2) + h^m)",
        tolerance=tolerance,
    )
    sups = {(s, t): sup_increments(batch, s, t) for s, t in pairs}
    spreads: Dict[str, float] = {}
    scaling: Dict[str, float] = {}
    exponents: Dict[str, float] = {}
    for m in m_list:
        hs, means, ratios, scaled = [], [], [], []
        for (s, t), sup in sups.items():
            h = t - s
            mean, se = mean_and_se(sup ** m)
            probe = Probe(
                label=f"m={m:g},s={s:g},t={t:g}",
                lhs=mean,
                se=se,
                bound=h ** (m / 2.0) + h ** m,
                params={"m": m, "s": s, "t": t},
            )
            report.probes.append(probe)
            if h > 0:
                hs.append(h)
                means.append(mean)
                ratios.append(probe.ratio)
                scaled.append(mean / h ** (m / 2.0))
        key = f"m{m:g}"
        spreads[key] = relative_spread(ratios)
        scaling[key] = relative_spread(scaled)
        fit = log_log(hs, means)
        exponents[key] = fit.slope if fit.usable else float("nan")

    report.fits["ratio_spread"] = spreads
    report.fits["scaling_spread"] = scaling
    report.fits["exponent"] = exponents
    m_sorted = sorted(m_list)
    base = exponents.get(f"m{m_sorted[0]:g}", float("nan"))
    deviations = {}
    for m in m_sorted[1:]:
        expected = base * m / m_sorted[0]
        deviations[f"m{m:g}"] = exponents[f"m{m:g}"] - expected
    report.fits["exponent_deviation"] = deviations
    if any(abs(v) > EXPONENT_TOLERANCE for v in deviations.values() if np.isfinite(v)):
        report.flag("exponent_scaling")

    report.fitted_constant = max(
        (pr.ratio for pr in report.probes if np.isfinite(pr.ratio)), default=float("nan")
    )
    if batch.dead_count:
        report.flag("dead_paths")
    finite = [v for v in spreads.values() if np.isfinite(v)]
    if not finite:
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "no positive gaps probed"
    else:
        report.verdict = Verdict.PASS if max(finite) <= tolerance else Verdict.FAIL
    logger.info("Increment moment check finished", extra={"spreads": spreads, "verdict": report.verdict.value})
    return report


def generator_action(coeffs: CoefficientSet, u: TestFunction, x: np.ndarray) -> np.ndarray:
    """(Lu)(x) = 1/2 tr(a(x) D^2 u(x)) + b(x) . Du(x)."""
    a = coeffs.diffusion(x)
    hess = u.hessian(x)
    drift = coeffs.drift(x)
    grad = u.gradient(x)
    return 0.5 * np.einsum("nij,nij->n", a, hess) + np.einsum("ni,ni->n", drift, grad)


def ito_formula_check(
    coeffs: CoefficientSet,
    u: TestFunction,
    batch: TrajectoryBatch,
    abs_tolerance: float = ITO_ABS_TOLERANCE,
) -> EstimateReport:
    """
    E u(x_T) - u(x_0) - E int_0^T (Lu)(x_s) ds = 0 for smooth u.

    The time integral is the left Riemann sum on the recorded grid, so the
    check holds to sampling noise plus the discretisation bias allowed by
    abs_tolerance.
    """
    paths = batch.alive_paths()
    n, k, d = paths.shape
    dt = np.diff(batch.times)
    left = paths[:, :-1].reshape(-1, d)
    lu = generator_action(coeffs, u, left).reshape(n, k - 1)
    residual = u(paths[:, -1]) - u(paths[:, 0]) - lu @ dt
    mean, se = mean_and_se(residual)

    report = EstimateReport(name="ito-formula", bound_shape="E u(x_T) - u(x_0) - E int Lu = 0", tolerance=abs_tolerance)
    report.probes.append(Probe(label="residual", lhs=mean, se=se, params={"T": float(batch.times[-1]), **u.to_dict()}))
    report.fitted_constant = mean
    if batch.dead_count:
        report.flag("dead_paths")
    if not np.isfinite(mean):
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "no finite residuals"
    elif abs(mean) <= SE_MARGIN * se + abs_tolerance:
        report.verdict = Verdict.PASS
    else:
        report.verdict = Verdict.FAIL
    return report
