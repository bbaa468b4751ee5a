import numpy as np
import pytest

from errors import CFLViolation, PreconditionError
from fields.coefficients import constant_coefficients, example_coefficients
from fields.example import ExampleParams
from sde.types import SimConfig
from semigroup.chaos import ChaosQuadSpec, chaos_symmetry_check, chaos_tail
from semigroup.convergence import (
    cauchy_rates,
    cauchy_verdict,
    heat_closed_form_check,
    heat_solution,
    maximum_principle_check,
    mollified_convergence,
    semigroup_property_check,
)
from semigroup.feynman_kac import feynman_kac
from semigroup.grid import GridFunction, GridSpec, load_grid_function, persist_grid_function
from semigroup.handle import SemigroupHandle
from semigroup.operator import GridOperator, evolve
from semigroup.qops import q_operator, q_operator_all
from estimates.types import Verdict


def _gaussian(width):
    return lambda x: heat_solution(width, 0.0, x)


@pytest.fixture
def coarse():
    return GridSpec.cube(dim=3, half_width=3.5, h=0.25)


def test_grid_spec_validates_pitch_and_box():
    with pytest.raises(PreconditionError):
        GridSpec.cube(dim=3, half_width=1.0, h=0.3)
    with pytest.raises(PreconditionError):
        GridSpec(box=((0.0, 0.0), (0.0, 1.0), (0.0, 1.0)), h=0.5)
    with pytest.raises(PreconditionError):
        GridSpec.cube(h=0.0)


def test_grid_spec_geometry(coarse):
    assert coarse.shape == (29, 29, 29)
    assert coarse.points().shape == (29 ** 3, 3)
    assert coarse.refined().shape == (57, 57, 57)
    assert coarse.covers([0.0, 0.0, 0.0], 0.5, T=0.1, delta=1.0)
    assert not coarse.covers([0.0, 0.0, 0.0], 0.5, T=1.0, delta=1.0)


def test_grid_function_rejects_bad_values(coarse):
    with pytest.raises(PreconditionError):
        GridFunction(coarse, np.zeros((3, 3, 3)))
    values = np.zeros(coarse.shape)
    values[0, 0, 0] = np.nan
    with pytest.raises(PreconditionError):
        GridFunction(coarse, values)


def test_cfl_violations_are_raised_before_stepping(coarse):
    coeffs = constant_coefficients()
    op = GridOperator(coeffs, coarse)
    assert op.cfl_limit == pytest.approx(0.25 ** 2 / 6.0)
    f = GridFunction.sample(coarse, _gaussian(0.7))
    with pytest.raises(CFLViolation):
        op.evolve(f, 0.1, dt=2.0 * op.cfl_limit)
    with pytest.raises(CFLViolation):
        evolve(f, coeffs, 0.1, dt_pde=0.0)


def test_heat_semigroup_converges_under_refinement(coarse):
    coeffs = constant_coefficients()
    errors = []
    for spec in (coarse, coarse.refined()):
        report = heat_closed_form_check(0.7, coeffs, spec, t=0.1, tolerance=0.02)
        assert report.verdict == Verdict.PASS
        errors.append(report.fitted_constant)
    assert errors[1] < errors[0] / 2.0


def test_closed_form_needs_brownian_coefficients(coarse):
    with pytest.raises(PreconditionError):
        heat_closed_form_check(0.7, constant_coefficients(sigma=2.0), coarse, t=0.1)


def test_maximum_principle(coarse):
    f = GridFunction.sample(coarse, _gaussian(0.5))
    report = maximum_principle_check(f, constant_coefficients(drift=[0.5, 0.0, 0.0]), times=[0.05, 0.1, 0.2])
    assert report.verdict == Verdict.PASS
    assert len(report.probes) == 3


def test_semigroup_property_on_a_shared_step(coarse):
    f = GridFunction.sample(coarse, _gaussian(0.7))
    report = semigroup_property_check(f, constant_coefficients(), s=0.02, t=0.03, dt_pde=0.001)
    assert report.verdict == Verdict.PASS
    assert report.fitted_constant < 1e-9


def test_handle_interpolates_snapshots(coarse):
    f = GridFunction.sample(coarse, _gaussian(0.7))
    handle = SemigroupHandle(f, constant_coefficients())
    handle.precompute([0.05, 0.1])
    snap = handle.snapshot(0.1)
    centre = tuple(n // 2 for n in coarse.shape)
    assert handle.value(0.1, [0.0, 0.0, 0.0]) == pytest.approx(snap.values[centre])
    assert handle.value(0.1, [10.0, 0.0, 0.0]) == 0.0
    assert np.allclose(handle.gradient(0.1, [0.0, 0.0, 0.0]), 0.0, atol=1e-12)
    assert handle.directional(0.1, [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]) < 0.0


def test_q_operators_follow_the_sigma_columns(coarse):
    f = GridFunction.sample(coarse, _gaussian(0.7))
    coeffs = constant_coefficients()
    qs = q_operator_all(0.05, f, coeffs)
    assert sorted(qs) == [0, 1, 2]
    # for sigma = I the k-th operator is the k-th partial derivative
    np.testing.assert_allclose(qs[1].values, np.swapaxes(qs[0].values, 0, 1), atol=1e-12)
    with pytest.raises(PreconditionError):
        q_operator(0, 0.0, f, coeffs)
    with pytest.raises(PreconditionError):
        q_operator(5, 0.05, f, coeffs)


def test_chaos_levels_are_symmetric_under_column_permutation():
    spec = GridSpec.cube(dim=3, half_width=3.0, h=0.5)
    f = GridFunction.sample(spec, _gaussian(0.8))
    quad = ChaosQuadSpec(nu=4.0, low_exp=-3.0, high_exp=1.0, count=4)
    report = chaos_tail(f, constant_coefficients(), nu=4.0, m_max=2, quad_spec=quad)
    assert [m for m, _ in report.levels] == [1, 2]
    assert all(value > 0.0 for _, value in report.levels)
    assert np.isfinite(report.decay_ratio)

    check = chaos_symmetry_check(f, constant_coefficients(), nu=4.0, m_max=2, quad_spec=quad)
    assert check.verdict == Verdict.PASS


def test_chaos_tail_preconditions():
    spec = GridSpec.cube(dim=3, half_width=2.0, h=0.5)
    f = GridFunction.sample(spec, _gaussian(0.5))
    with pytest.raises(PreconditionError):
        chaos_tail(f, constant_coefficients(), nu=1.0, m_max=4)
    with pytest.raises(PreconditionError):
        chaos_tail(f, constant_coefficients(), nu=1.0, quad_spec=ChaosQuadSpec(nu=2.0))
    with pytest.raises(PreconditionError):
        ChaosQuadSpec(nu=0.0)


def test_grid_function_files_keep_values_and_flags(coarse, tmp_path):
    gf = GridFunction.sample(coarse, _gaussian(0.7), time_tag=0.5)
    gf.flag("boundary_contamination")
    persist_grid_function(gf, tmp_path / "u")
    loaded = load_grid_function(tmp_path / "u")
    np.testing.assert_array_equal(loaded.values, gf.values)
    assert loaded.spec == gf.spec
    assert loaded.time_tag == 0.5
    assert loaded.flags == ["boundary_contamination"]


def test_feynman_kac_matches_the_heat_solution():
    config = SimConfig(dt=0.05, T=1.0, n_paths=4000, master_seed=13)
    points = [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]
    result = feynman_kac(_gaussian(0.5), constant_coefficients(), 0.25, points, config)
    exact = heat_solution(0.5, 0.25, np.asarray(points))
    assert result.t == 0.25
    assert np.all(result.se > 0.0)
    assert np.all(np.abs(result.values - exact) <= 4.0 * result.se)
    assert result.dead_paths.tolist() == [0, 0]


def test_feynman_kac_preconditions():
    config = SimConfig(dt=0.05, T=1.0, n_paths=64, master_seed=1)
    with pytest.raises(PreconditionError):
        feynman_kac(_gaussian(0.5), constant_coefficients(), 0.0, [[0.0, 0.0, 0.0]], config)
    with pytest.raises(PreconditionError):
        feynman_kac(_gaussian(0.5), constant_coefficients(), 0.25, [[0.0, 0.0]], config)


def test_mollified_convergence_of_constant_coefficients(coarse):
    f = GridFunction.sample(coarse, _gaussian(0.7))
    report = mollified_convergence(f, constant_coefficients(), ns=(1, 2, 4), t=0.05)
    assert report.verdict == Verdict.PASS
    assert [pr.label for pr in report.probes] == ["n=1->2", "n=2->4"]
    assert report.fitted_constant == pytest.approx(0.0, abs=1e-12)


def test_evolve_is_linear(coarse):
    coeffs = example_coefficients(ExampleParams()).mollified(4)
    f = GridFunction.sample(coarse, _gaussian(0.6))
    g = GridFunction.sample(coarse, lambda x: heat_solution(0.8, 0.0, x - np.array([0.5, 0.0, 0.0])))
    combined = evolve(2.0 * f + (-3.0) * g, coeffs, 0.05)
    separate = 2.0 * evolve(f, coeffs, 0.05) + (-3.0) * evolve(g, coeffs, 0.05)
    assert combined.distance(separate) <= 1e-10 * max(1.0, separate.sup_norm())


def test_cauchy_rates_treat_vanishing_distances_as_converged():
    assert cauchy_rates([4e-3, 2e-3, 0.0]) == [2.0, float("inf")]
    assert cauchy_rates([0.0, 1e-3]) == [0.0]


@pytest.mark.parametrize(
    "sups, flags, expected",
    [
        ([4e-3, 1.9e-3, 0.9e-3], [], Verdict.PASS),
        ([0.0, 0.0, 0.0], [], Verdict.PASS),
        ([1.74e-3, 2.61e-3, 1.25e-3], [], Verdict.FAIL),
        ([1.74e-3, 2.61e-3, 1.25e-3], ["boundary_contamination", "non_monotone"], Verdict.INCONCLUSIVE),
        ([4e-3, 3e-3, 1e-3], ["non_monotone"], Verdict.FAIL),
        ([1e-3], [], Verdict.INCONCLUSIVE),
    ],
)
def test_cauchy_verdict_needs_halving_per_doubling(sups, flags, expected):
    verdict, message = cauchy_verdict(sups, flags)
    assert verdict == expected
    if expected == Verdict.PASS:
        assert message is None
    else:
        assert message


def test_mollified_convergence_of_the_example_reports_its_rates():
    spec = GridSpec.cube(dim=3, half_width=2.0, h=0.25)
    f = GridFunction.sample(spec, _gaussian(0.5))
    report = mollified_convergence(f, example_coefficients(ExampleParams()), ns=(1, 2, 4, 8), t=0.25)
    rates = report.fits["cauchy_rates"]
    assert len(report.probes) == 3
    assert len(rates) == 2
    assert report.fits["required_rate"] == pytest.approx(1.8)
    sups = [pr.lhs for pr in report.probes]
    np.testing.assert_allclose(rates, [sups[0] / sups[1], sups[1] / sups[2]])
    if all(rate >= 1.8 for rate in rates):
        assert report.verdict == Verdict.PASS
    else:
        assert report.verdict in (Verdict.FAIL, Verdict.INCONCLUSIVE)
        assert "below 1.8" in report.message
