import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import DegenerateFamilyError, PreconditionError
from estimates.exits import exit_bounds_check, laplace_exit_check
from estimates.family import Gaussian, IndicatorBall, TensorBump, TestFunctionFamily, default_family
from estimates.fitting import log_linear, log_log, max_ratio, ols
from estimates.flow import flow_lower_bound_check
from estimates.heat_kernel import heat_kernel_bound_check
from estimates.moments import INCREMENT_TOLERANCE, increment_moment_check, ito_formula_check
from estimates.occupation import admissibility_check, krylov_check
from estimates.types import EstimateReport, Probe, Verdict, json_safe, mean_and_se, relative_spread
from fields.base import ConstantField
from fields.coefficients import constant_coefficients
from sde.euler import euler_maruyama
from sde.flow import derivative_flow
from sde.types import SimConfig
from semigroup.convergence import heat_solution


@pytest.mark.parametrize(
    "verdicts, expected",
    [
        ([Verdict.PASS, Verdict.PASS], Verdict.PASS),
        ([Verdict.PASS, Verdict.INCONCLUSIVE], Verdict.INCONCLUSIVE),
        ([Verdict.INCONCLUSIVE, Verdict.FAIL, Verdict.PASS], Verdict.FAIL),
        ([], Verdict.PASS),
    ],
)
def test_verdicts_combine_worst_first(verdicts, expected):
    assert Verdict.combine(verdicts) == expected


def test_relative_spread_is_distance_from_midrange():
    assert relative_spread([0.75, 1.25]) == pytest.approx(0.25)
    assert relative_spread([2.0, float("nan"), 2.0]) == 0.0
    assert np.isnan(relative_spread([float("nan")]))


@given(st.lists(st.floats(min_value=0.01, max_value=100.0), min_size=1, max_size=20))
@settings(max_examples=50)
def test_relative_spread_is_scale_free_and_bounded(values):
    spread = relative_spread(values)
    assert 0.0 <= spread < 1.0
    assert relative_spread([3.0 * v for v in values]) == pytest.approx(spread, abs=1e-12)


def test_mean_and_se_ignore_non_finite_samples():
    mean, se = mean_and_se([1.0, 2.0, 3.0, float("inf"), float("nan")])
    assert mean == pytest.approx(2.0)
    assert se == pytest.approx(1.0 / np.sqrt(3.0))
    assert mean_and_se([5.0]) == (5.0, 0.0)


def test_json_safe_converts_numpy_and_non_finite_values():
    payload = json_safe({"a": np.float64(1.5), "b": np.array([1, 2]), "c": float("inf"), "d": np.bool_(True)})
    assert payload == {"a": 1.5, "b": [1, 2], "c": "inf", "d": True}


def test_probe_ratio_edge_cases():
    assert np.isnan(Probe(label="x", lhs=1.0).ratio)
    assert Probe(label="x", lhs=0.0, bound=0.0).ratio == 0.0
    assert Probe(label="x", lhs=3.0, bound=2.0).ratio == 1.5


def test_report_rows_end_with_a_summary():
    report = EstimateReport(name="demo", bound_shape="N f", probes=[Probe(label="a", lhs=1.0, bound=2.0)])
    report.flag("coarse")
    report.flag("coarse")
    rows = report.rows()
    assert [r["row"] for r in rows] == ["probe", "summary"]
    assert rows[-1]["flags"] == "coarse"
    assert rows[0]["ratio"] == 0.5


def test_ols_recovers_an_exact_line():
    x = np.linspace(0.0, 1.0, 11)
    fit = ols(x, 2.0 - 3.0 * x)
    assert fit.slope == pytest.approx(-3.0)
    assert fit.intercept == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.usable


def test_ols_needs_two_distinct_abscissae():
    assert not ols([1.0, 1.0], [2.0, 3.0]).usable
    assert not ols([1.0], [2.0]).usable


def test_log_fits_drop_non_positive_values():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert log_log(x, 5.0 * x ** -1.5).slope == pytest.approx(-1.5)
    fit = log_linear([0.0, 1.0, 2.0, 3.0], [1.0, np.e ** -2, 0.0, np.e ** -6])
    assert fit.n == 3
    assert fit.slope == pytest.approx(-2.0)


def test_max_ratio_is_the_smallest_valid_constant():
    assert max_ratio([1.0, 4.0, 2.0], [1.0, 2.0, 0.0]) == 2.0
    assert np.isnan(max_ratio([1.0], [0.0]))


def _numeric_lp_norm(f, p, half_width, dim=1, points=4001):
    axis = np.linspace(-half_width, half_width, points)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    cell = (axis[1] - axis[0]) ** dim
    return (np.sum(np.abs(f(grid)) ** p) * cell) ** (1.0 / p)


@pytest.mark.parametrize("p", [1.0, 2.0, 2.6, 4.0])
def test_closed_form_norms_match_quadrature(p):
    assert Gaussian([0.0], 0.7, amplitude=2.0).lp_norm(p) == pytest.approx(
        _numeric_lp_norm(Gaussian([0.0], 0.7, amplitude=2.0), p, 8.0), rel=1e-6
    )
    assert TensorBump([0.0, 0.0], 0.5).lp_norm(p) == pytest.approx(
        _numeric_lp_norm(TensorBump([0.0, 0.0], 0.5), p, 0.5, dim=2, points=801), rel=1e-3
    )
    assert IndicatorBall([0.0], 0.5).lp_norm(p) == pytest.approx(1.0 ** (1.0 / p))


def test_gradients_match_finite_differences(rng):
    pts = rng.uniform(-0.5, 0.5, size=(20, 3))
    h = 1e-6
    for f in (Gaussian([0.1, 0.0, 0.0], 0.4), TensorBump([0.0, 0.0, 0.0], 0.75)):
        fd = np.stack([(f(pts + h * e) - f(pts - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
        np.testing.assert_allclose(f.gradient(pts), fd, atol=1e-6)


def test_families_reject_degenerate_input():
    with pytest.raises(DegenerateFamilyError):
        TestFunctionFamily([], 2.0)
    with pytest.raises(DegenerateFamilyError):
        TestFunctionFamily([Gaussian([0.0], 1.0, amplitude=0.0)], 2.0)
    with pytest.raises(PreconditionError):
        TestFunctionFamily([Gaussian([0.0], 1.0)], 0.5)
    with pytest.raises(PreconditionError):
        Gaussian([0.0], 0.0)


@pytest.fixture(scope="module")
def brownian_batch():
    config = SimConfig(dt=0.01, T=0.5, n_paths=512, master_seed=21)
    return euler_maruyama(constant_coefficients(), [0.0, 0.0, 0.0], config, radii=[1.0])


def test_admissibility_fits_a_finite_constant(brownian_batch):
    report = admissibility_check(brownian_batch, default_family(dim=3, p=2.6))
    assert report.verdict == Verdict.PASS
    assert np.isfinite(report.fitted_constant)
    assert len(report.probes) == 3


def test_admissibility_rejects_exponent_outside_range(brownian_batch):
    with pytest.raises(PreconditionError):
        admissibility_check(brownian_batch, default_family(dim=3, p=2.0))
    with pytest.raises(PreconditionError):
        admissibility_check(brownian_batch, default_family(dim=3, p=2.8), q=2.7)
    with pytest.raises(PreconditionError):
        admissibility_check(brownian_batch, default_family(dim=3, p=2.6), T=1.0)


def test_ito_formula_holds_for_brownian_motion(brownian_batch):
    report = ito_formula_check(constant_coefficients(), Gaussian([0.2, 0.0, 0.0], 0.5), brownian_batch)
    assert report.verdict == Verdict.PASS
    assert report.probes[0].se > 0.0


@pytest.fixture(scope="module")
def exit_batches():
    config = SimConfig(dt=0.002, T=2.0, n_paths=2048, master_seed=5, store_paths=False)
    batch = euler_maruyama(constant_coefficients(), [0.0, 0.0, 0.0], config, radii=[0.5, 1.0])
    return {0.5: batch, 1.0: batch}


def test_exit_tails_decay_geometrically_for_brownian_motion(exit_batches):
    report = exit_bounds_check(exit_batches, tail_step=0.125)
    assert report.verdict == Verdict.PASS
    assert set(report.fits["xi"]) == {"0.5", "1"}
    assert all(0.0 < xi < 1.0 for xi in report.fits["xi"].values())
    # E tau_R = R^2 / d for Brownian motion started at the centre
    for scaled in report.fits["mean_tau_over_R2"]:
        assert scaled == pytest.approx(1.0 / 3.0, abs=0.05)
    assert "short_horizon" in report.flags


def test_laplace_transform_decreases_in_sqrt_lambda_r(exit_batches):
    report = laplace_exit_check(exit_batches)
    assert report.verdict == Verdict.PASS
    assert report.fits["c"] > 0.0
    assert np.isfinite(report.fits["A"])
    with pytest.raises(PreconditionError):
        laplace_exit_check(exit_batches, lambdas=(0.5,), R0=1.0)


def test_increment_moments_scale_like_brownian_motion(brownian_batch):
    pairs = [(0.0, 0.04), (0.0, 0.08), (0.0, 0.16), (0.0, 0.32)]
    report = increment_moment_check(brownian_batch, pairs=pairs)
    assert report.verdict != Verdict.INCONCLUSIVE
    assert len(report.probes) == 8
    assert report.fits["exponent"]["m2"] == pytest.approx(1.0, abs=0.3)
    assert report.fits["exponent"]["m4"] == pytest.approx(2.0, abs=0.6)
    with pytest.raises(PreconditionError):
        increment_moment_check(brownian_batch, pairs=[(0.0, 0.035)])
    with pytest.raises(PreconditionError):
        increment_moment_check(brownian_batch, pairs=[(0.0, 2.0)])


def test_heat_kernel_check_preconditions_and_probes(brownian_batch):
    with pytest.raises(PreconditionError):
        heat_kernel_bound_check(brownian_batch, default_family(dim=3, p=1.5))
    with pytest.raises(PreconditionError):
        heat_kernel_bound_check(brownian_batch, default_family(dim=3, p=2.5), q=2.2)

    times = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
    report = heat_kernel_bound_check(brownian_batch, default_family(dim=3, p=2.0), times=times)
    assert len(report.probes) == 3 * len(times)
    assert np.isfinite(report.fitted_constant)
    assert report.fits["slope_floor"] == pytest.approx(-0.75)
    assert report.verdict in (Verdict.PASS, Verdict.FAIL)


class _HeatGradient:
    def __init__(self, width):
        self.width = width

    def gradient(self, t, x):
        pts = np.atleast_2d(x)
        return -pts / (self.width ** 2 + t) * heat_solution(self.width, t, pts)[:, None]


def test_flow_lower_bound_holds_for_brownian_motion():
    config = SimConfig(dt=0.01, T=0.25, n_paths=2000, master_seed=9)
    flow = derivative_flow(
        constant_coefficients(),
        [0.3, 0.0, 0.0],
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        config,
        k0_field=ConstantField(0.0, 3),
    )
    f = Gaussian([0.0, 0.0, 0.0], 0.5)
    report = flow_lower_bound_check(flow, _HeatGradient(0.5), f, times=[0.1, 0.25])
    assert report.name == "flow-lower-bound"
    assert len(report.probes) == 4
    assert report.verdict in (Verdict.PASS, Verdict.INCONCLUSIVE)
    along_x = [pr for pr in report.probes if pr.params["eta"][0] == 1.0]
    assert all(pr.bound > 0.0 and pr.lhs >= pr.bound for pr in along_x)
    with pytest.raises(PreconditionError):
        flow_lower_bound_check(flow, _HeatGradient(0.5), f, times=[0.105])


@pytest.mark.parametrize("dead, expected", [(2, Verdict.PASS), (12, Verdict.INCONCLUSIVE)])
def test_admissibility_counts_paths_that_died_before_the_horizon(brownian_batch, dead, expected):
    mask = np.zeros(brownian_batch.n_paths, dtype=bool)
    mask[:dead] = True
    batch = dataclasses.replace(brownian_batch, dead=mask)
    report = admissibility_check(batch, default_family(dim=3, p=2.6))
    assert report.verdict == expected
    assert report.fits["dead_fraction"] == pytest.approx(dead / 512)
    assert "dead_paths" in report.flags


def test_krylov_check_counts_paths_that_never_exit(brownian_batch):
    family = default_family(dim=3, p=2.0)
    inside = krylov_check(brownian_batch, family, radii=[0.5], d0=2.5)
    assert inside.fits["censored_fraction"] <= 0.01
    assert inside.verdict == Verdict.PASS

    # E tau_1 = 1/3, so a sizeable share of paths is still inside B_1 at T = 0.5
    wide = krylov_check(brownian_batch, family, radii=[1.0], d0=2.5)
    assert wide.fits["censored_fraction"] > 0.01
    assert "censored" in wide.flags
    assert wide.verdict == Verdict.INCONCLUSIVE
    assert "did not exit by T" in wide.message


def test_laplace_check_brackets_paths_censored_before_r_squared(brownian_batch):
    # T = 0.5 < R^2 = 1, so paths still inside B_1 at T have an unknown tau'
    report = laplace_exit_check({1.0: brownian_batch})
    assert "censored" in report.flags
    laplace = [pr for pr in report.probes if "lambda" in pr.params]
    censored = laplace[0].params["censored"]
    assert censored > 0
    for pr in laplace:
        gap = censored / brownian_batch.n_paths * np.exp(-pr.params["lambda"] * 0.5)
        assert 0.0 < pr.params["lower"] < pr.lhs
        assert pr.lhs - pr.params["lower"] == pytest.approx(gap)
    at_horizon = [pr for pr in report.probes if pr.params.get("t") == 0.5][0]
    assert at_horizon.lhs == pytest.approx(1.0 - censored / brownian_batch.n_paths)
    assert np.isfinite(report.fits["c_lower"])
    assert report.verdict in (Verdict.PASS, Verdict.INCONCLUSIVE)


def test_laplace_check_skips_small_times_beyond_the_horizon(brownian_batch):
    report = laplace_exit_check({2.0: brownian_batch})
    assert "beyond_horizon" in report.flags
    assert max(pr.params["t"] for pr in report.probes if "t" in pr.params) <= 0.5


@pytest.fixture(scope="module")
def fine_brownian_batch():
    config = SimConfig(dt=2.0 ** -10, T=0.25, n_paths=4000, master_seed=33)
    return euler_maruyama(constant_coefficients(), [0.0, 0.0, 0.0], config)


def test_brownian_increments_scale_within_fifteen_percent(fine_brownian_batch):
    assert INCREMENT_TOLERANCE == 0.15
    report = increment_moment_check(fine_brownian_batch, m_list=(2,))
    assert report.tolerance == 0.15
    assert len(report.probes) == 5
    assert report.fits["scaling_spread"]["m2"] <= 0.15
    assert report.verdict == Verdict.PASS


def test_ballistic_increments_fail_the_brownian_scaling(fine_brownian_batch):
    times = fine_brownian_batch.times
    ballistic = np.broadcast_to(times[None, :, None], fine_brownian_batch.paths.shape).copy()
    batch = dataclasses.replace(fine_brownian_batch, paths=ballistic)
    report = increment_moment_check(batch, m_list=(2,))
    assert report.fits["ratio_spread"]["m2"] > 0.15
    assert report.verdict == Verdict.FAIL


def test_integer_exit_ladder_probes_whole_multiples_of_r_squared(exit_batches):
    report = exit_bounds_check(exit_batches, tail_step=1.0)
    tails = [pr for pr in report.probes if "s" in pr.params]
    assert {pr.params["s"] for pr in tails} == {1.0, 2.0, 3.0, 4.0}
    assert all(float(pr.params["s"]).is_integer() for pr in tails)
    # P(tau_R >= R^2) is about 1.4% for Brownian motion: too few survivors to fit
    assert report.verdict == Verdict.INCONCLUSIVE
    assert "few_survivors" in report.flags
