"""
Occupation-time estimates.

    E int_0^T f(x_t) dt <= N_T ||f||_{L_p((0,T) x R^d)}

and its local form inside the exit time of a ball,

    E int_0^{tau_R} f(x_t) dt <= N R^{2 - d/d0} ||f||_{L_{d0}(B_R)}.

Time integrals are left-endpoint Riemann sums on the recorded grid.
"""

from typing import Optional, Sequence

import numpy as np

from errors import PreconditionError
from estimates.family import TestFunctionFamily
from estimates.fitting import max_ratio
from estimates.types import EstimateReport, Probe, Verdict, mean_and_se, relative_spread
from logging_config import get_logger
from morrey.balls import Ball
from morrey.quadrature import ball_integral
from sde.exits import exit_and_hitting
from sde.types import TrajectoryBatch

logger = get_logger(__name__)

# Fraction of cut-short paths above which occupation statistics are not
# trusted. Over a fixed horizon a path is cut short only by dying; inside an
# exit time it is also cut short by not exiting before T.
CENSOR_LIMIT = 0.01
KRYLOV_TOLERANCE = 0.5


def _grid_upto(batch: TrajectoryBatch, T: float) -> int:
    """Number of recorded left endpoints with t < T."""
    return int(np.searchsorted(batch.times, T - 1e-12, side="left"))


def occupation_integrals(batch: TrajectoryBatch, f, T: Optional[float] = None, stop: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Per-path left Riemann sums of f(x_t) over [0, T), alive paths only.

    Args:
        stop: Optional per-path stopping times; steps starting at or after
            the stopping time contribute nothing.
    """
    paths = batch.alive_paths()
    T = batch.config.T if T is None else T
    k = _grid_upto(batch, T)
    edges = np.minimum(batch.times[: k + 1], T)
    widths = np.diff(edges)
    n, _, d = paths.shape
    values = np.asarray(f(paths[:, :k].reshape(-1, d)), dtype=float).reshape(n, k)
    if stop is not None:
        values = np.where(batch.times[None, :k] < stop[:, None], values, 0.0)
    return values @ widths


def _too_many_dead(report: EstimateReport, batch: TrajectoryBatch) -> bool:
    frac = batch.dead_count / batch.n_paths
    report.fits["dead_fraction"] = frac
    if batch.dead_count:
        report.flag("dead_paths")
    return frac > CENSOR_LIMIT


def admissibility_check(
    batch: TrajectoryBatch,
    family: TestFunctionFamily,
    T: Optional[float] = None,
    q: Optional[float] = None,
) -> EstimateReport:
    """
    Fit N_T over a family of time-independent test functions.

    ||f||_{L_p((0,T) x R^d)} = T^{1/p} ||f||_{L_p}. The fitted N_T is the largest
    ratio; any finite N_T makes the estimate hold, so the verdict only turns
    inconclusive when more than 1% of the paths died before T.

    Raises:
        PreconditionError: p outside (d/2 + 1, q).
    """
    d = batch.dim
    p = family.p
    T = batch.config.T if T is None else T
    if p <= d / 2.0 + 1.0 or (q is not None and p >= q):
        raise PreconditionError(f"p must lie in (d/2 + 1, q), got p={p}, d={d}, q={q}")
    if T > batch.config.T + 1e-12:
        raise PreconditionError(f"T={T} exceeds the simulated horizon {batch.config.T}")

    report = EstimateReport(name="admissibility", bound_shape="N_T T^(1/p) ||f||_p")
    for i, (f, norm) in enumerate(zip(family, family.norms)):
        mean, se = mean_and_se(occupation_integrals(batch, f, T))
        report.probes.append(
            Probe(label=f"f{i}", lhs=mean, se=se, bound=T ** (1.0 / p) * norm, params={"T": T, **f.to_dict()})
        )

    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    if all(pr.lhs == 0.0 for pr in report.probes):
        report.fitted_constant = 0.0
    if _too_many_dead(report, batch):
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "more than 1% of the paths died"
    elif np.isfinite(report.fitted_constant):
        report.verdict = Verdict.PASS
    else:
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "no finite ratio"
    logger.info(
        "Admissibility check finished",
        extra={"fitted_constant": report.fitted_constant, "verdict": report.verdict.value},
    )
    return report


def local_lp_norm(f, ball: Ball, p: float, nodes: int = 1 << 13) -> float:
    """||f||_{L_p(B)} by ball quadrature."""
    value, _ = ball_integral(lambda x: np.abs(f(x)) ** p, ball, nodes)
    return float(value ** (1.0 / p))


def krylov_check(
    batch: TrajectoryBatch,
    family: TestFunctionFamily,
    radii: Sequence[float],
    d0: float,
) -> EstimateReport:
    """
    Local occupation estimate inside B_R, probed over radii and the family.

    d0 is an input: the admissible exponent of the underlying estimate is not
    constructive. The check passes when the per-radius worst ratio is stable
    within +-50% across the radii. Paths that have not left B_R by T only
    contribute up to T; more than 1% of them, or of dead paths, makes the
    check inconclusive.
    """
    d = batch.dim
    if not d / 2.0 < d0 <= d:
        raise PreconditionError(f"d0 must lie in (d/2, d], got {d0}")
    exits = batch.exits
    missing = exits is None or any(not np.any(np.isclose(exits.radii, R)) for R in radii)
    if missing:
        exits = exit_and_hitting(batch, radii)

    report = EstimateReport(
        name="krylov",
        bound_shape="N R^(2 - d/d0) ||f||_{L_d0(B_R)}",
        tolerance=KRYLOV_TOLERANCE,
    )
    per_radius = []
    censored_fraction = 0.0
    for R in radii:
        tau = exits.tau[batch.alive, exits.column(R)]
        if np.isnan(tau).any():
            report.flag("censored")
        censored_fraction = max(censored_fraction, float(np.mean(np.isnan(tau))) if tau.size else 0.0)
        stop = np.where(np.isnan(tau), np.inf, tau)
        ball = Ball.at(np.zeros(d), R)
        ratios = []
        for i, f in enumerate(family):
            mean, se = mean_and_se(occupation_integrals(batch, f, stop=stop))
            bound = R ** (2.0 - d / d0) * local_lp_norm(f, ball, d0)
            probe = Probe(label=f"R={R},f{i}", lhs=mean, se=se, bound=bound, params={"R": R})
            report.probes.append(probe)
            ratios.append(probe.ratio)
        finite = [r for r in ratios if np.isfinite(r)]
        per_radius.append(max(finite) if finite else float("nan"))

    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    spread = relative_spread(per_radius)
    report.fits["per_radius"] = per_radius
    report.fits["ratio_spread"] = spread
    report.fits["censored_fraction"] = censored_fraction
    too_many_dead = _too_many_dead(report, batch)
    if too_many_dead or censored_fraction > CENSOR_LIMIT or not np.isfinite(spread):
        report.verdict = Verdict.INCONCLUSIVE
        if censored_fraction > CENSOR_LIMIT:
            report.message = f"{censored_fraction:.1%} of the paths did not exit by T"
    else:
        report.verdict = Verdict.PASS if spread <= KRYLOV_TOLERANCE else Verdict.FAIL
    return report
