"""
Checks on the grid semigroup: convergence under mollification, the semigroup
property, the gradient and pointwise bounds, the maximum principle, and
agreement with Feynman-Kac.
"""

from typing import Any, Callable, List, Optional, Sequence

import numpy as np

from errors import PreconditionError
from estimates.family import TestFunctionFamily
from estimates.fitting import max_ratio
from estimates.types import SE_MARGIN, EstimateReport, Probe, Verdict, relative_spread
from fields.coefficients import CoefficientSet
from logging_config import get_logger
from sde.types import SimConfig
from semigroup.feynman_kac import feynman_kac
from semigroup.grid import GridFunction, GridSpec
from semigroup.handle import SemigroupHandle
from semigroup.operator import GridOperator
from worker import WorkerPool

logger = get_logger(__name__)

DEFAULT_SCALES = (2, 4, 8, 16)
# Relative growth of a Cauchy distance tolerated before flagging it.
MONOTONE_TOLERANCE = 0.1
# Each doubling of n must shrink the distance by this factor, less RATE_TOLERANCE.
CAUCHY_RATE = 2.0
RATE_TOLERANCE = 0.1
# Distances below this count as converged.
DISTANCE_FLOOR = 1e-12
# Flags that make a missed rate inconclusive instead of a failure.
RESOLUTION_FLAGS = ("boundary_contamination", "truncation", "dead_paths")
GRADIENT_TOLERANCE = 0.3
POINTWISE_TOLERANCE = 0.5
SEMIGROUP_TOLERANCE = 1e-3
MAXIMUM_PRINCIPLE_TOLERANCE = 1e-6
CROSS_METHOD_FLOOR = 5e-3
HEAT_TOLERANCE = 1e-3


def _copy_flags(report: EstimateReport, gf: GridFunction) -> None:
    for flag in gf.flags:
        report.flag(flag)


def mollified_convergence(
    f: GridFunction,
    coeffs: CoefficientSet,
    ns: Sequence[int] = DEFAULT_SCALES,
    t: float = 0.25,
    p: float = 2.0,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """
    Cauchy table of T_{n,t} f over increasing mollification scales.

    Probes hold the sup distance between consecutive scales, with the grid
    L_p distance alongside. Growth of a distance by more than 10% is flagged
    non_monotone. See cauchy_verdict for how the rates decide the verdict.
    """
    evolved: List[GridFunction] = []
    for n in ns:
        out = GridOperator(coeffs.mollified(int(n)), f.spec).evolve(f, t, dt_pde)
        evolved.append(out)

    report = EstimateReport(name="mollify-convergence", bound_shape="|T_{n,t} f - T_{2n,t} f| -> 0")
    sups: List[float] = []
    for (n_a, u_a), (n_b, u_b) in zip(zip(ns, evolved), zip(ns[1:], evolved[1:])):
        sup = u_a.distance(u_b)
        report.probes.append(
            Probe(
                label=f"n={n_a}->{n_b}",
                lhs=sup,
                params={"n": int(n_a), "n_next": int(n_b), "lp_distance": u_a.distance(u_b, p), "t": t},
            )
        )
        sups.append(sup)
        _copy_flags(report, u_b)
    rates = cauchy_rates(sups)
    for a, b in zip(sups, sups[1:]):
        if b > a * (1.0 + MONOTONE_TOLERANCE) and b > DISTANCE_FLOOR:
            report.flag("non_monotone")
    report.fits["cauchy_rates"] = rates
    report.fits["required_rate"] = CAUCHY_RATE * (1.0 - RATE_TOLERANCE)

    report.fitted_constant = sups[-1] if sups else float("nan")
    report.verdict, report.message = cauchy_verdict(sups, report.flags)
    logger.info("Mollified convergence table computed", extra={"distances": sups, "rates": rates})
    return report


def cauchy_rates(sups: Sequence[float]) -> List[float]:
    """Ratios of consecutive distances; a vanishing distance counts as converged."""
    rates = []
    for a, b in zip(sups, sups[1:]):
        if b > DISTANCE_FLOOR:
            rates.append(a / b)
        else:
            rates.append(float("inf"))
    return rates


def cauchy_verdict(sups: Sequence[float], flags: Sequence[str] = ()) -> "tuple[Verdict, Optional[str]]":
    """
    Every doubling of n must shrink the distance by CAUCHY_RATE (less
    RATE_TOLERANCE). A missed rate fails, unless a resolution flag is set,
    which makes it inconclusive. All distances below DISTANCE_FLOOR pass.
    """
    if not sups:
        return Verdict.INCONCLUSIVE, "fewer than two scales"
    if max(sups) <= DISTANCE_FLOOR:
        return Verdict.PASS, None
    if len(sups) < 2:
        return Verdict.INCONCLUSIVE, "a single distance has no rate"
    required = CAUCHY_RATE * (1.0 - RATE_TOLERANCE)
    slow = [r for r in cauchy_rates(sups) if r < required]
    if not slow:
        return Verdict.PASS, None
    message = f"Cauchy rate {min(slow):.3g} below {required:g}"
    if any(flag in RESOLUTION_FLAGS for flag in flags):
        return Verdict.INCONCLUSIVE, f"{message} on an unresolved grid"
    return Verdict.FAIL, message


def semigroup_property_check(
    f: GridFunction,
    coeffs: CoefficientSet,
    s: float,
    t: float,
    tolerance: float = SEMIGROUP_TOLERANCE,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """evolve(evolve(f, s), t) = evolve(f, s + t) to tolerance * sup|f|."""
    op = GridOperator(coeffs, f.spec)
    two_stage = op.evolve(op.evolve(f, s, dt_pde), t, dt_pde)
    one_stage = op.evolve(f, s + t, dt_pde)
    gap = two_stage.distance(one_stage)
    scale = f.sup_norm()
    report = EstimateReport(name="semigroup-property", bound_shape="tolerance * sup|f|", tolerance=tolerance)
    report.probes.append(Probe(label=f"s={s:g},t={t:g}", lhs=gap, bound=tolerance * scale, params={"s": s, "t": t}))
    report.fitted_constant = gap / scale if scale > 0 else 0.0
    report.verdict = Verdict.PASS if gap <= tolerance * scale else Verdict.FAIL
    _copy_flags(report, one_stage)
    return report


def gradient_lp_norm(op: GridOperator, gf: GridFunction, p: float) -> float:
    """Grid L_p norm of |D u|."""
    grad = op.gradient(gf)
    norm = np.sqrt(np.sum(grad ** 2, axis=0))
    return float((gf.spec.cell_volume * np.sum(norm ** p)) ** (1.0 / p))


def gradient_bound_check(
    f: GridFunction,
    coeffs: CoefficientSet,
    times: Sequence[float] = (0.05, 0.1, 0.2, 0.5, 1.0),
    p: float = 2.0,
    tolerance: float = GRADIENT_TOLERANCE,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """
    ||D T_t f||_p <= N t^{-1/2} ||f||_p with N stable within +-tolerance over t.
    """
    op = GridOperator(coeffs, f.spec)
    norm_f = f.lp_norm(p)
    report = EstimateReport(name="gradient-bound", bound_shape="N t^(-1/2) ||f||_p", tolerance=tolerance)
    for t, snap in zip(times, op.evolve_snapshots(f, times, dt_pde)):
        report.probes.append(
            Probe(
                label=f"t={t:g}",
                lhs=gradient_lp_norm(op, snap, p),
                bound=norm_f / np.sqrt(t),
                params={"t": t, "p": p},
            )
        )
        _copy_flags(report, snap)
    ratios = [pr.ratio for pr in report.probes]
    spread = relative_spread(ratios)
    report.fitted_constant = max_ratio([pr.lhs for pr in report.probes], [pr.bound for pr in report.probes])
    report.fits["ratio_spread"] = spread
    if not np.isfinite(spread):
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "f vanishes on the grid"
    else:
        report.verdict = Verdict.PASS if spread <= tolerance else Verdict.FAIL
    return report


def pointwise_bound_check(
    family: TestFunctionFamily,
    coeffs: CoefficientSet,
    spec: GridSpec,
    times: Sequence[float] = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0),
    tolerance: float = POINTWISE_TOLERANCE,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """
    sup|T_t f| <= N (t ^ 1)^{-d/(2p)} ||f||_p over the family.

    The worst ratio over the family at each t must be stable within
    +-tolerance across t.
    """
    d, p = spec.dim, family.p
    op = GridOperator(coeffs, spec)
    report = EstimateReport(name="pointwise-bound", bound_shape="N (t ^ 1)^(-d/(2p)) ||f||_p", tolerance=tolerance)
    worst = np.zeros(len(times))
    for k, (f, norm) in enumerate(zip(family, family.norms)):
        gf = GridFunction.sample(spec, f)
        for j, (t, snap) in enumerate(zip(times, op.evolve_snapshots(gf, times, dt_pde))):
            probe = Probe(
                label=f"f{k},t={t:g}",
                lhs=snap.sup_norm(),
                bound=min(t, 1.0) ** (-d / (2.0 * p)) * norm,
                params={"t": t, "member": k},
            )
            report.probes.append(probe)
            if np.isfinite(probe.ratio):
                worst[j] = max(worst[j], probe.ratio)
            _copy_flags(report, snap)
    spread = relative_spread(worst)
    report.fits.update({"worst_per_time": worst, "ratio_spread": spread})
    report.fitted_constant = float(np.max(worst))
    report.verdict = Verdict.PASS if spread <= tolerance else Verdict.FAIL
    return report


def maximum_principle_check(
    f: GridFunction,
    coeffs: CoefficientSet,
    times: Sequence[float],
    tolerance: float = MAXIMUM_PRINCIPLE_TOLERANCE,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """0 <= T_t f <= sup f for f >= 0, up to tolerance * sup f."""
    top = float(np.max(f.values))
    op = GridOperator(coeffs, f.spec)
    report = EstimateReport(name="maximum-principle", bound_shape="0 <= T_t f <= sup f", tolerance=tolerance)
    violation = 0.0
    for t, snap in zip(times, op.evolve_snapshots(f, times, dt_pde)):
        below = max(0.0, -float(snap.values.min()))
        above = max(0.0, float(snap.values.max()) - top)
        violation = max(violation, below, above)
        report.probes.append(
            Probe(
                label=f"t={t:g}",
                lhs=max(below, above),
                bound=tolerance * top,
                params={"t": t, "min": float(snap.values.min()), "max": float(snap.values.max())},
            )
        )
        _copy_flags(report, snap)
    report.fitted_constant = violation / top if top > 0 else 0.0
    report.verdict = Verdict.PASS if violation <= tolerance * max(top, 0.0) else Verdict.FAIL
    return report


def cross_method_check(
    f: Callable[[np.ndarray], Any],
    coeffs: CoefficientSet,
    spec: GridSpec,
    t: float,
    points: Sequence[Sequence[float]],
    mc_config: SimConfig,
    floor: float = CROSS_METHOD_FLOOR,
    pool: Optional[WorkerPool] = None,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """
    Grid evolution against Feynman-Kac at probe points.

    Passes when |evolve - feynman_kac| <= max(3 SE, floor) at every point.
    """
    handle = SemigroupHandle(GridFunction.sample(spec, f), coeffs, dt_pde=dt_pde)
    grid_values = np.atleast_1d(handle.value(t, np.atleast_2d(np.asarray(points, dtype=float))))
    mc = feynman_kac(f, coeffs, t, points, mc_config, pool=pool)

    report = EstimateReport(name="cross-method", bound_shape="max(3 SE, floor)", tolerance=floor)
    ok = True
    for x, grid_value, mc_value, se in zip(mc.points, grid_values, mc.values, mc.se):
        gap = abs(float(grid_value) - float(mc_value))
        allowed = max(SE_MARGIN * float(se), floor)
        ok = ok and gap <= allowed
        report.probes.append(
            Probe(
                label=f"x={np.array2string(x, precision=3, separator=',')}",
                lhs=gap,
                se=float(se),
                bound=allowed,
                params={"grid": float(grid_value), "monte_carlo": float(mc_value), "t": t},
            )
        )
    for flag in mc.flags + handle.snapshot(t).flags:
        report.flag(flag)
    report.fitted_constant = max(pr.lhs for pr in report.probes)
    report.verdict = Verdict.PASS if ok else Verdict.FAIL
    return report


def heat_solution(width: float, t: float, points: np.ndarray) -> np.ndarray:
    """e^{t Delta / 2} applied to exp(-|x|^2 / (2 w^2)), in closed form."""
    pts = np.atleast_2d(points)
    var = width ** 2 + t
    return (width ** 2 / var) ** (pts.shape[1] / 2.0) * np.exp(-np.sum(pts * pts, axis=1) / (2.0 * var))


def heat_closed_form_check(
    width: float,
    coeffs: CoefficientSet,
    spec: GridSpec,
    t: float,
    tolerance: float = HEAT_TOLERANCE,
    dt_pde: Optional[float] = None,
) -> EstimateReport:
    """
    Max-node error of evolve against the Gaussian closed form.

    Raises:
        PreconditionError: The coefficients are not a = I, b = 0.
    """
    probe_points = np.vstack([np.zeros(spec.dim), 0.5 * np.eye(spec.dim)])
    a = coeffs.diffusion(probe_points)
    b = coeffs.drift(probe_points)
    if not (np.allclose(a, np.eye(spec.dim)[None]) and np.allclose(b, 0.0)):
        raise PreconditionError("the closed form needs a = I and b = 0")
    f = GridFunction.sample(spec, lambda x: heat_solution(width, 0.0, x))
    u = GridOperator(coeffs, spec).evolve(f, t, dt_pde)
    exact = heat_solution(width, t, spec.points()).reshape(spec.shape)
    error = float(np.max(np.abs(u.values - exact)))

    report = EstimateReport(name="heat-closed-form", bound_shape="max |evolve - exact|", tolerance=tolerance)
    report.probes.append(Probe(label=f"t={t:g}", lhs=error, bound=tolerance, params={"t": t, "h": spec.h, "width": width}))
    report.fitted_constant = error
    report.verdict = Verdict.PASS if error <= tolerance else Verdict.FAIL
    _copy_flags(report, u)
    return report
