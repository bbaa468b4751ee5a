"""
Experiment handlers for each experiment kind.

Each handler turns a validated ExperimentConfig into an ExperimentResult:
the estimate reports it checked, any descriptive tables, a JSON summary and
the plots to draw. Handlers never write files; the runner does.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from estimates.coefficients import check_mollified_properties
from estimates.exits import exit_bounds_check, laplace_exit_check, visit_probability_check
from estimates.family import Gaussian, default_family, gaussian_ladder
from estimates.flow import flow_lower_bound_check
from estimates.heat_kernel import DEFAULT_TIMES, heat_kernel_bound_check, resolvent_bound_check
from estimates.moments import increment_moment_check, ito_formula_check
from estimates.occupation import admissibility_check, krylov_check
from estimates.types import EstimateReport, Probe, Verdict, relative_spread
from experiments.config import ExperimentConfig, ExperimentKind, exponent_p
from experiments.journal import RunJournal
from experiments.types import ExperimentResult, PlotSpec, Series
from fields.base import ConstantField, Field
from fields.coefficients import CoefficientSet, DiffusionField
from fields.registry import Built, get_field_registry
from fields.remark24 import remark24_lp_mass
from logging_config import get_logger
from morrey.balls import Ball
from morrey.embedding import embedding_check, mollified_weighted_check, mollifier_bound_check
from morrey.norms import morrey_norm
from morrey.oscillation import poincare_check, sharp_oscillation
from sde.coupling import skorokhod_check
from sde.euler import euler_maruyama
from sde.flow import derivative_flow
from sde.storage import persist_batch
from sde.types import TrajectoryBatch
from semigroup.chaos import ChaosQuadSpec, chaos_symmetry_check, chaos_tail
from semigroup.convergence import (
    cross_method_check,
    gradient_bound_check,
    heat_closed_form_check,
    maximum_principle_check,
    mollified_convergence,
    pointwise_bound_check,
    semigroup_property_check,
)
from semigroup.grid import GridFunction, GridSpec, persist_grid_function
from semigroup.handle import SemigroupHandle
from worker import WorkerPool

logger = get_logger(__name__)

# Widths of the Gaussian ladder used for the heat-kernel and resolvent checks.
HEAT_KERNEL_WIDTHS = np.geomspace(0.05, 2.0, 12)
REFINEMENT_TOLERANCE = 0.15
SURVIVAL_POINTS = 50


@dataclass
class RunContext:
    """What a handler may use besides its config."""

    fields: Dict[str, Built]
    pool: WorkerPool
    journal: RunJournal
    artifacts_dir: Optional[Path] = None  # set when output.persist is on
    artifacts: List[str] = field(default_factory=list)

    def primary(self) -> Built:
        return next(iter(self.fields.values()))


Handler = Callable[[ExperimentConfig, RunContext], ExperimentResult]


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _coefficients(ctx: RunContext) -> CoefficientSet:
    built = ctx.primary()
    if not isinstance(built, CoefficientSet):
        raise TypeError("this experiment needs a coefficient set, not a single field")
    return built


def _single_field(ctx: RunContext) -> Field:
    built = ctx.primary()
    if not isinstance(built, Field):
        raise TypeError("this experiment needs a single field")
    return built


def _start(config: ExperimentConfig, dim: int) -> np.ndarray:
    return config.vector("sim.start", dim)


def _simulate(
    config: ExperimentConfig,
    ctx: RunContext,
    coeffs: CoefficientSet,
    radii: Optional[Sequence[float]] = None,
    **overrides: Any,
) -> TrajectoryBatch:
    sim = config.sim_config(**overrides)
    start = _start(config, coeffs.dim_d)
    ctx.journal.step("Simulating", data={"n_paths": sim.n_paths, "dt": sim.dt, "T": sim.T, "seed": sim.master_seed})
    batch = euler_maruyama(coeffs, start, sim, radii=radii, pool=ctx.pool)
    if batch.dead_count:
        ctx.journal.warn("Paths died", data={"dead": batch.dead_count})
    if ctx.artifacts_dir is not None:
        written = persist_batch(batch, ctx.artifacts_dir / f"batch_{len(ctx.artifacts)}")
        ctx.artifacts.extend(str(p.name) for p in written.values())
    return batch


def _grid(config: ExperimentConfig, ctx: RunContext, coeffs: CoefficientSet, horizon: float, radius: float) -> GridSpec:
    spec = GridSpec.cube(dim=coeffs.dim_d, half_width=config.number("grid.half_width"), h=config.number("grid.h"))
    if not spec.covers(np.zeros(coeffs.dim_d), radius, horizon, coeffs.delta):
        ctx.journal.warn(
            "Box does not cover the padded support",
            data={"half_width": config.number("grid.half_width"), "T": horizon, "delta": coeffs.delta},
        )
    return spec


def _dt_pde(config: ExperimentConfig) -> Optional[float]:
    return config.number("grid.dt_pde") if config.has("grid.dt_pde") else None


def _gaussian(config: ExperimentConfig, dim: int, default_width: float = 1.0) -> Gaussian:
    center = config.vector("check.center", dim) if config.has("check.center") else np.zeros(dim)
    return Gaussian(center, config.number("check.width", default_width))


def _persist_grid(ctx: RunContext, gf: GridFunction, name: str) -> None:
    if ctx.artifacts_dir is not None:
        written = persist_grid_function(gf, ctx.artifacts_dir / name)
        ctx.artifacts.extend(Path(p).name for p in written.values())


def _probe_plot(
    report: EstimateReport,
    name: str,
    x_param: str,
    group_param: Optional[str] = None,
    y: str = "lhs",
    logx: bool = False,
    logy: bool = False,
) -> PlotSpec:
    """One series per value of group_param, plotting `y` against a probe parameter."""
    groups: Dict[Any, List[Probe]] = {}
    for probe in report.probes:
        if x_param not in probe.params:
            continue
        key = probe.params.get(group_param) if group_param else report.name
        groups.setdefault(key, []).append(probe)
    series = []
    for key, probes in groups.items():
        probes = sorted(probes, key=lambda pr: pr.params[x_param])
        values = [pr.ratio if y == "ratio" else pr.lhs for pr in probes]
        label = f"{group_param}={key}" if group_param else str(key)
        series.append(Series(label, [float(pr.params[x_param]) for pr in probes], values))
    return PlotSpec(
        name=name,
        title=f"{report.name}: {report.bound_shape}",
        xlabel=x_param,
        ylabel=y,
        series=series,
        logx=logx,
        logy=logy,
    )


def _result(kind: ExperimentKind, handler_name: str, **kwargs: Any) -> ExperimentResult:
    return ExperimentResult(success=True, handler_name=handler_name, kind=kind, **kwargs)


# ---------------------------------------------------------------------------
# Morrey-class experiments
# ---------------------------------------------------------------------------


def handle_morrey_norm(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """Morrey norm of every configured field, with the sampled balls."""
    q, R0 = config.number("params.q"), config.number("params.R0")
    budget = config.search_budget()
    rows: List[Dict[str, Any]] = []
    summary: Dict[str, Any] = {"fields": {}, "flags": []}
    plot = PlotSpec(name="morrey_witness", title="ball values by radius", xlabel="radius", ylabel="value", style="scatter", logx=True)

    for name, built in ctx.fields.items():
        ctx.journal.step("Estimating Morrey norm", data={"field": name, "q": q, "R0": R0})
        report = morrey_norm(built, q, R0, search=budget, pool=ctx.pool)
        rows.extend({"field": name, **row} for row in report.rows())
        rows.append(
            {
                "field": name,
                "radius": report.witness.radius,
                **{f"center_{i}": c for i, c in enumerate(report.witness.center)},
                "value": report.value,
                "witness": True,
            }
        )
        summary["fields"][name] = report.to_dict()
        summary["flags"].extend(f for f in report.flags if f not in summary["flags"])
        plot.series.append(Series(name, [s.ball.radius for s in report.samples], [s.value for s in report.samples]))
        ctx.journal.info("Morrey norm", data={"field": name, "value": report.value, "witness": report.witness.to_dict()})

    return _result(
        config.kind,
        "handle_morrey_norm",
        tables={"morrey": rows},
        summary=summary,
        plots=[plot],
        message=", ".join(f"{n}: {s['value']:.6g}" for n, s in summary["fields"].items()),
    )


def handle_oscillation(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """Sharp oscillation a_r^# with its sampled balls."""
    r = config.number("check.r")
    report = sharp_oscillation(_single_field(ctx), r, search=config.search_budget())
    rows = [
        {"radius": ball.radius, **{f"center_{i}": c for i, c in enumerate(ball.center)}, "value": value}
        for ball, value in report.samples
    ]
    plot = PlotSpec(
        name="oscillation",
        title=f"osc(a, B) for radius <= {r:g}",
        xlabel="radius",
        ylabel="osc",
        style="scatter",
        logx=True,
        series=[Series("samples", [b.radius for b, _ in report.samples], [v for _, v in report.samples])],
    )
    return _result(
        config.kind,
        "handle_oscillation",
        tables={"oscillation": rows},
        summary=report.to_dict(),
        plots=[plot],
        message=f"a_r^# = {report.value:.6g}",
    )


def handle_embedding(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    field_ = _single_field(ctx)
    q = config.number("params.q")
    p = exponent_p(config, field_.dim)
    report = embedding_check(field_, q, p, config.number("params.R0"), search=config.search_budget(), pool=ctx.pool)
    return _result(config.kind, "handle_embedding", reports=[report])


def handle_mollifier_bound(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """Morrey norms of b * zeta_n against b, and the weighted L_p convergence."""
    field_ = _single_field(ctx)
    q, R0 = config.number("params.q"), config.number("params.R0")
    ns = [int(n) for n in config.numbers("check.ns")]
    bound = mollifier_bound_check(field_, q, R0, ns, search=config.search_budget(), pool=ctx.pool)
    u = _gaussian(config, field_.dim, default_width=0.5)
    weighted = mollified_weighted_check(field_, u, exponent_p(config, field_.dim), ns)
    return _result(
        config.kind,
        "handle_mollifier_bound",
        reports=[bound, weighted],
        plots=[
            _probe_plot(bound, "mollifier_ratio", "n", y="ratio", logx=True),
            _probe_plot(weighted, "mollified_weighted", "n", logx=True, logy=True),
        ],
    )


def handle_poincare(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """Oscillation against rho times the average |Da| for the mollified a of every field."""
    n = int(config.numbers("check.n")[0])
    fields_ = []
    for built in ctx.fields.values():
        coeffs = built if isinstance(built, CoefficientSet) else None
        if coeffs is None:
            raise TypeError("poincare needs coefficient sets")
        fields_.append(DiffusionField(coeffs if coeffs.smooth else coeffs.mollified(n)))
    dim = fields_[0].dim
    centers = config.vectors("check.centers", dim) if config.has("check.centers") else np.vstack(
        [np.zeros(dim), np.eye(dim)[0] * 0.5]
    )
    balls = [Ball.at(c, r) for c in centers for r in config.numbers("check.radii")]
    report = poincare_check(fields_, balls)
    return _result(config.kind, "handle_poincare", reports=[report], plots=[_probe_plot(report, "poincare", "radius", y="ratio", logx=True)])


def handle_counterexample(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """
    The bump chain: Morrey norm bounded in the truncation, L_p mass unbounded.

    The Morrey report passes when the norms over check.n_max stay within
    +-check.tolerance of their midrange; the mass report passes when the
    truncated mass grows at least check.mass_growth times between the first
    and last entry of check.mass_n_max.
    """
    registry = get_field_registry()
    name = next(iter(ctx.fields))
    definition = config.field_definition(name)
    q_field = float(definition.get("q", 2.5))
    q = config.number("params.q") if config.has("params.q") else q_field
    R0 = config.number("params.R0")
    tolerance = config.number("check.tolerance")

    morrey = EstimateReport(name="counterexample-morrey", bound_shape="sup over N of ||b_N||", tolerance=tolerance)
    for n_max in (int(n) for n in config.numbers("check.n_max")):
        ctx.journal.step("Morrey norm of the truncated chain", data={"n_max": n_max})
        truncated = registry.build_field({**definition, "n_max": n_max}, component="drift")
        report = morrey_norm(truncated, q, R0, search=config.search_budget(), pool=ctx.pool)
        morrey.probes.append(Probe(label=f"N={n_max}", lhs=report.value, params={"n_max": n_max, "q": q}))
        for flag in report.flags:
            morrey.flag(flag)
    values = [pr.lhs for pr in morrey.probes]
    spread = relative_spread(values)
    morrey.fitted_constant = float(max(values))
    morrey.fits["ratio_spread"] = spread
    morrey.verdict = Verdict.PASS if spread <= tolerance else Verdict.FAIL

    # the mass is a property of the unmollified chain
    params = registry.build_field({**definition, "kind": "remark24"}, component="drift").params
    p = config.number("params.p") if config.has("params.p") else q_field + 0.3
    growth_needed = config.number("check.mass_growth")
    mass = EstimateReport(name="counterexample-mass", bound_shape="int_B1 b_N^p grows with N", tolerance=growth_needed)
    for n_max in (int(n) for n in config.numbers("check.mass_n_max")):
        value = remark24_lp_mass(params, p, n_max)
        mass.probes.append(Probe(label=f"N={n_max}", lhs=value, params={"n_max": n_max, "p": p}))
    growth = mass.probes[-1].lhs / mass.probes[0].lhs if mass.probes[0].lhs > 0 else float("inf")
    mass.fitted_constant = growth
    mass.fits["growth"] = growth
    mass.verdict = Verdict.PASS if growth >= growth_needed else Verdict.FAIL
    ctx.journal.info("Truncated mass growth", data={"p": p, "growth": growth})

    return _result(
        config.kind,
        "handle_counterexample",
        reports=[morrey, mass],
        summary={"remark24": params.to_dict(), "mass_exponent": p},
        plots=[
            _probe_plot(morrey, "counterexample_morrey", "n_max", logx=True),
            _probe_plot(mass, "counterexample_mass", "n_max", logx=True, logy=True),
        ],
    )


def handle_mollified_coefficients(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    n = int(config.numbers("check.n")[0])
    rng = np.random.default_rng(config.integer("sim.master_seed"))
    points = np.vstack([np.zeros(coeffs.dim_d), rng.uniform(-1.0, 1.0, size=(config.integer("check.samples"), coeffs.dim_d))])
    report = check_mollified_properties(
        coeffs,
        n,
        points,
        config.number("params.q"),
        config.number("params.R0"),
        search=config.search_budget(),
        pool=ctx.pool,
    )
    return _result(config.kind, "handle_mollified_coefficients", reports=[report])


# ---------------------------------------------------------------------------
# Path experiments
# ---------------------------------------------------------------------------


def _survival_series(tau: np.ndarray, horizon: float, label: str) -> Series:
    grid = np.linspace(0.0, horizon, SURVIVAL_POINTS)
    alive = np.where(np.isnan(tau), np.inf, tau)
    return Series(label, grid.tolist(), [float(np.mean(alive > t)) for t in grid])


def handle_simulate(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """Plain simulation with exit statistics and terminal moments."""
    coeffs = _coefficients(ctx)
    radii = config.numbers("check.radii")
    batch = _simulate(config, ctx, coeffs, radii=radii, store_paths=False)
    exits = batch.exits
    start = batch.start
    alive = batch.alive

    rows: List[Dict[str, Any]] = []
    plot = PlotSpec(name="exit_tails", title="P(tau_R > t)", xlabel="t", ylabel="survival", logy=True)
    for j, R in enumerate(exits.radii):
        tau = exits.tau[alive, j]
        resolved = tau[~np.isnan(tau)]
        mean = float(resolved.mean()) if resolved.size else float("nan")
        se = float(resolved.std(ddof=1) / np.sqrt(resolved.size)) if resolved.size > 1 else float("nan")
        rows.append(
            {
                "table": "exits",
                "R": float(R),
                "mean_tau": mean,
                "se": se,
                "censored": int(np.isnan(tau).sum()),
                "brownian_reference": max(float(R) ** 2 - float(start @ start), 0.0) / coeffs.dim_d,
            }
        )
        plot.series.append(_survival_series(tau, batch.config.T, f"R={float(R):g}"))

    increments = batch.terminal[alive] - start
    for i in range(batch.dim):
        rows.append(
            {
                "table": "terminal",
                "component": i,
                "mean": float(increments[:, i].mean()),
                "variance": float(increments[:, i].var(ddof=1)) if increments.shape[0] > 1 else float("nan"),
            }
        )
    summary = {"batch": batch.to_dict(), "exits": [r for r in rows if r["table"] == "exits"], "flags": list(batch.flags)}
    if batch.dead_count:
        summary["flags"].append("dead_paths")
    return _result(config.kind, "handle_simulate", tables={"simulate": rows}, summary=summary, plots=[plot])


def handle_exit_stats(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    radii = config.numbers("check.radii")
    batch = _simulate(config, ctx, coeffs, radii=radii, store_paths=False, stop_on_exit=True)
    report = exit_bounds_check(
        {R: batch for R in radii},
        n_max=config.integer("check.n_max"),
        tail_step=config.number("check.tail_step"),
    )
    plot = _probe_plot(report, "exit_tails", "s", group_param="R", logy=True)
    return _result(config.kind, "handle_exit_stats", reports=[report], plots=[plot])


def handle_laplace(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    radii = config.numbers("check.radii")
    batch = _simulate(config, ctx, coeffs, radii=radii, store_paths=False)
    report = laplace_exit_check(
        {R: batch for R in radii},
        lambdas=config.numbers("check.lambdas"),
        R0=config.number("params.R0"),
    )
    plot = _probe_plot(report, "laplace", "lambda", group_param="R", logx=True, logy=True)
    return _result(config.kind, "handle_laplace", reports=[report], plots=[plot])


def handle_visit_probability(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    R = config.number("check.R")
    batch = _simulate(config, ctx, coeffs, radii=[R], store_paths=False)
    return _result(config.kind, "handle_visit_probability", reports=[visit_probability_check(batch, R)])


def handle_increments(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    batch = _simulate(config, ctx, coeffs, store_paths=True)
    pairs = None
    if config.has("check.pairs"):
        pairs = [(float(s), float(t)) for s, t in config.get("check.pairs")]
    report = increment_moment_check(batch, m_list=config.numbers("check.m_list"), pairs=pairs)
    plot = _probe_plot(report, "increments", "t", group_param="m", logx=True, logy=True)
    return _result(config.kind, "handle_increments", reports=[report], plots=[plot])


def handle_krylov(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    radii = config.numbers("check.radii")
    batch = _simulate(config, ctx, coeffs, radii=radii, store_paths=True)
    family = default_family(coeffs.dim_d, p=exponent_p(config, coeffs.dim_d), center=batch.start)
    report = krylov_check(batch, family, radii, config.number("check.d0"))
    return _result(config.kind, "handle_krylov", reports=[report], plots=[_probe_plot(report, "krylov", "R", y="ratio")])


def handle_occupation(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    batch = _simulate(config, ctx, coeffs, store_paths=True)
    family = default_family(coeffs.dim_d, p=exponent_p(config, coeffs.dim_d), center=batch.start)
    report = admissibility_check(batch, family, q=config.number("params.q"))
    return _result(config.kind, "handle_occupation", reports=[report])


def handle_heat_kernel(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """Heat-kernel and resolvent bounds over a Gaussian ladder at the start point."""
    coeffs = _coefficients(ctx)
    batch = _simulate(config, ctx, coeffs, store_paths=True)
    p = exponent_p(config, coeffs.dim_d)
    q = config.number("params.q")
    family = gaussian_ladder(batch.start, HEAT_KERNEL_WIDTHS, p)
    times = config.numbers("check.times", list(DEFAULT_TIMES))
    heat = heat_kernel_bound_check(batch, family, times=times, q=q)
    resolvent = resolvent_bound_check(batch, family, lambdas=config.numbers("check.lambdas"), q=q)
    return _result(
        config.kind,
        "handle_heat_kernel",
        reports=[heat, resolvent],
        plots=[
            _probe_plot(heat, "heat_kernel", "t", group_param="member", logx=True, logy=True),
            _probe_plot(resolvent, "resolvent", "lambda", group_param="member", logx=True, logy=True),
        ],
    )


def handle_ito_formula(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    batch = _simulate(config, ctx, coeffs, store_paths=True)
    u = Gaussian(batch.start, config.number("check.width"))
    return _result(config.kind, "handle_ito_formula", reports=[ito_formula_check(coeffs, u, batch)])


def handle_skorokhod(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    sim = config.sim_config(store_paths=True)
    ctx.journal.step("Coupled simulation", data={"ns": config.numbers("check.ns"), "n_paths": sim.n_paths})
    report = skorokhod_check(
        coeffs,
        _start(config, coeffs.dim_d),
        sim,
        ns=[int(n) for n in config.numbers("check.ns")],
        pool=ctx.pool,
    )
    return _result(config.kind, "handle_skorokhod", reports=[report], plots=[_probe_plot(report, "skorokhod", "n", logx=True, logy=True)])


def handle_derivative_flow(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """E (eta_t . Df(x_t))^2 against (eta . D T_t f(x))^2 on mollified coefficients."""
    coeffs = _coefficients(ctx)
    n = int(config.numbers("check.n")[0])
    smooth = coeffs if coeffs.smooth else coeffs.mollified(n)
    dim = smooth.dim_d
    etas = config.vectors("check.etas", dim)
    times = config.numbers("check.times")
    k0 = ConstantField(config.number("check.k0"), dim) if config.has("check.k0") else None

    sim = config.sim_config(store_paths=True)
    start = _start(config, dim)
    ctx.journal.step("Simulating derivative flow", data={"n_paths": sim.n_paths, "etas": len(etas), "n": n})
    flow = derivative_flow(smooth, start, etas, sim, k0_field=k0, pool=ctx.pool)

    f = _gaussian(config, dim, default_width=0.5)
    spec = _grid(config, ctx, smooth, max(times), f.support_radius)
    handle = SemigroupHandle(GridFunction.sample(spec, f), smooth, dt_pde=_dt_pde(config))
    handle.precompute(times)
    ctx.journal.step("Grid semigroup precomputed", data={"times": times, "shape": list(spec.shape)})
    report = flow_lower_bound_check(flow, handle, f, times=times)
    return _result(config.kind, "handle_derivative_flow", reports=[report], summary={"flow": flow.to_dict()})


# ---------------------------------------------------------------------------
# Grid experiments
# ---------------------------------------------------------------------------


def handle_semigroup(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """
    Maximum principle, semigroup property, gradient and pointwise bounds, and
    optionally the heat closed form and agreement with Feynman-Kac.
    """
    coeffs = _coefficients(ctx)
    dim = coeffs.dim_d
    times = config.numbers("check.times")
    f = _gaussian(config, dim)
    spec = _grid(config, ctx, coeffs, max(times), f.support_radius)
    gf = GridFunction.sample(spec, f)
    dt_pde = _dt_pde(config)
    s, t = config.number("check.s"), config.number("check.t")

    ctx.journal.step("Evolving on the grid", data={"shape": list(spec.shape), "times": times})
    reports = [
        maximum_principle_check(gf, coeffs, times, dt_pde=dt_pde),
        semigroup_property_check(gf, coeffs, s, t, dt_pde=dt_pde),
        gradient_bound_check(gf, coeffs, times, p=2.0, dt_pde=dt_pde),
    ]
    if config.flag("check.pointwise", True):
        family = gaussian_ladder(np.zeros(dim), [0.25, 0.5, 1.0], exponent_p(config, dim))
        reports.append(pointwise_bound_check(family, coeffs, spec, times, dt_pde=dt_pde))
    if config.flag("check.closed_form", False):
        reports.append(heat_closed_form_check(f.width, coeffs, spec, t, dt_pde=dt_pde))
    if config.has("check.points"):
        points = config.vectors("check.points", dim)
        ctx.journal.step("Feynman-Kac at probe points", data={"points": len(points)})
        reports.append(cross_method_check(f, coeffs, spec, t, points, config.sim_config(T=t), pool=ctx.pool, dt_pde=dt_pde))
    if ctx.artifacts_dir is not None:
        _persist_grid(ctx, gf, "initial")

    plots = [_probe_plot(reports[2], "gradient_bound", "t", y="ratio", logx=True)]
    return _result(config.kind, "handle_semigroup", reports=reports, plots=plots)


def handle_mollify_convergence(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    coeffs = _coefficients(ctx)
    t, s = config.number("check.t"), config.number("check.s")
    f = _gaussian(config, coeffs.dim_d)
    spec = _grid(config, ctx, coeffs, t, f.support_radius)
    gf = GridFunction.sample(spec, f)
    dt_pde = _dt_pde(config)
    ns = [int(n) for n in config.numbers("check.ns")]
    ctx.journal.step("Cauchy table over mollification scales", data={"ns": ns, "t": t})
    convergence = mollified_convergence(gf, coeffs, ns, t, p=2.0, dt_pde=dt_pde)
    composition = semigroup_property_check(gf, coeffs.mollified(ns[-1]), s, t, dt_pde=dt_pde)
    plot = _probe_plot(convergence, "mollify_convergence", "n", logx=True, logy=True)
    return _result(config.kind, "handle_mollify_convergence", reports=[convergence, composition], plots=[plot])


def _refinement_report(coarse: float, fine: float) -> EstimateReport:
    change = abs(fine - coarse) / abs(coarse) if coarse not in (0.0,) and np.isfinite(coarse) else float("nan")
    report = EstimateReport(name="chaos-refinement", bound_shape="|ratio(h/2) - ratio(h)| / ratio(h)", tolerance=REFINEMENT_TOLERANCE)
    report.probes.append(Probe(label="h->h/2", lhs=change, bound=REFINEMENT_TOLERANCE, params={"coarse": coarse, "fine": fine}))
    report.fitted_constant = change
    if not np.isfinite(change):
        report.verdict = Verdict.INCONCLUSIVE
        report.message = "decay ratio not resolved on the coarse grid"
    else:
        report.verdict = Verdict.PASS if change <= REFINEMENT_TOLERANCE else Verdict.FAIL
    return report


def handle_chaos_decay(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """
    The chaos-tail levels I_m and their decay ratio.

    The levels are reported, never asserted; only the optional refinement
    and symmetry comparisons carry verdicts.
    """
    coeffs = _coefficients(ctx)
    if config.has("check.n"):
        coeffs = coeffs.mollified(int(config.numbers("check.n")[0]))
    nu = config.number("check.nu")
    m_max = config.integer("check.m_max")
    p = config.number("check.p", 2.0)
    f = _gaussian(config, coeffs.dim_d)
    spec = _grid(config, ctx, coeffs, 2.0 ** 2 / nu, f.support_radius)
    quad = ChaosQuadSpec(nu=nu, count=config.integer("check.nodes", 10))
    dt_pde = _dt_pde(config)

    ctx.journal.step("Chaos levels", data={"nu": nu, "m_max": m_max, "shape": list(spec.shape)})
    chaos = chaos_tail(GridFunction.sample(spec, f), coeffs, nu, m_max, quad, p, pool=ctx.pool, dt_pde=dt_pde)
    ctx.journal.info("Chaos levels computed", data={"levels": chaos.levels, "decay_ratio": chaos.decay_ratio})

    reports: List[EstimateReport] = []
    summary: Dict[str, Any] = {"chaos": chaos.to_dict(), "flags": list(chaos.flags)}
    if config.flag("check.refine", False):
        fine_spec = spec.refined()
        ctx.journal.step("Chaos levels on the refined grid", data={"shape": list(fine_spec.shape)})
        fine = chaos_tail(GridFunction.sample(fine_spec, f), coeffs, nu, m_max, quad, p, pool=ctx.pool)
        summary["refined"] = fine.to_dict()
        reports.append(_refinement_report(chaos.decay_ratio, fine.decay_ratio))
    if config.flag("check.symmetry"):
        reports.append(chaos_symmetry_check(GridFunction.sample(spec, f), coeffs, nu, min(m_max, 2), quad, p, pool=ctx.pool))

    levels = [m for m, _ in chaos.levels]
    plot = PlotSpec(
        name="chaos_levels",
        title=f"I_m at nu={nu:g} (decay ratio {chaos.decay_ratio:.3g})",
        xlabel="m",
        ylabel="I_m",
        logy=True,
        series=[Series("I_m", levels, [v for _, v in chaos.levels])],
    )
    return _result(
        config.kind,
        "handle_chaos_decay",
        reports=reports,
        tables={"chaos": chaos.rows()},
        summary=summary,
        plots=[plot],
        message=f"decay ratio {chaos.decay_ratio:.6g}",
    )


# Handler registry
HANDLER_REGISTRY: Dict[ExperimentKind, Handler] = {
    ExperimentKind.MORREY_NORM: handle_morrey_norm,
    ExperimentKind.OSCILLATION: handle_oscillation,
    ExperimentKind.EMBEDDING: handle_embedding,
    ExperimentKind.SIMULATE: handle_simulate,
    ExperimentKind.EXIT_STATS: handle_exit_stats,
    ExperimentKind.LAPLACE: handle_laplace,
    ExperimentKind.INCREMENTS: handle_increments,
    ExperimentKind.KRYLOV_CHECK: handle_krylov,
    ExperimentKind.HEAT_KERNEL: handle_heat_kernel,
    ExperimentKind.SEMIGROUP: handle_semigroup,
    ExperimentKind.CHAOS_DECAY: handle_chaos_decay,
    ExperimentKind.MOLLIFY_CONVERGENCE: handle_mollify_convergence,
    ExperimentKind.COUNTEREXAMPLE: handle_counterexample,
    ExperimentKind.DERIVATIVE_FLOW: handle_derivative_flow,
    ExperimentKind.MOLLIFIER_BOUND: handle_mollifier_bound,
    ExperimentKind.POINCARE: handle_poincare,
    ExperimentKind.OCCUPATION: handle_occupation,
    ExperimentKind.VISIT_PROBABILITY: handle_visit_probability,
    ExperimentKind.ITO_FORMULA: handle_ito_formula,
    ExperimentKind.SKOROKHOD: handle_skorokhod,
    ExperimentKind.MOLLIFIED_COEFFICIENTS: handle_mollified_coefficients,
}


def dispatch_experiment(config: ExperimentConfig, ctx: RunContext) -> ExperimentResult:
    """
    Dispatch to the handler registered for the config's kind.

    Returns:
        ExperimentResult from the handler, or a failed result when no handler
        is registered. Exceptions raised by the handler propagate.
    """
    handler = HANDLER_REGISTRY.get(config.kind)
    if not handler:
        logger.error("No handler registered for experiment", extra={"experiment": config.kind.value})
        return ExperimentResult(
            success=False,
            handler_name="dispatch_experiment",
            kind=config.kind,
            error=f"No handler for experiment: {config.kind.value}",
            error_code="NO_HANDLER",
        )
    logger.info("Dispatching experiment", extra={"experiment": config.kind.value, "handler": handler.__name__})
    return handler(config, ctx)
