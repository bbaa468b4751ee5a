import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ConfigError, PreconditionError, RadiiRuleError
from fields.base import ConstantField
from fields.coefficients import constant_coefficients, example_coefficients, grad_sigma_norm
from fields.example import ExampleParams, example_drift
from fields.mollify import MollifierSpec, mollify
from fields.radial import InverseRadialField
from fields.registry import get_field_registry, parse_kind
from fields.remark24 import RadiiRule, Remark24Params, remark24_drift, remark24_lp_mass


def _points_with_origin(rng, count=1000):
    return np.vstack([np.zeros(3), rng.uniform(-2.0, 2.0, size=(count - 1, 3))])


def test_example_diffusion_is_constant_multiple_of_identity(rng):
    params = ExampleParams(alpha=1.0, beta=0.3, gamma=0.1)
    coeffs = example_coefficients(params)
    a = coeffs.diffusion(_points_with_origin(rng))
    expected = (1.0 + 0.09) * np.eye(3)
    assert np.max(np.abs(a - expected)) <= 1e-12


@given(
    alpha=st.floats(min_value=0.1, max_value=3.0),
    beta=st.floats(min_value=0.0, max_value=3.0),
)
@settings(max_examples=40, deadline=None)
def test_example_ellipticity_for_any_parameters(alpha, beta):
    coeffs = example_coefficients(ExampleParams(alpha=alpha, beta=beta, gamma=0.0))
    lo, hi = coeffs.ellipticity_range(np.array([[0.3, -0.2, 0.9], [0.0, 0.0, 0.0], [5.0, 1.0, -2.0]]))
    lam = alpha ** 2 + beta ** 2
    assert lo == pytest.approx(lam, rel=1e-10)
    assert hi == pytest.approx(lam, rel=1e-10)
    assert coeffs.check_ellipticity([[1.0, 2.0, 3.0]])


def test_grad_sigma_norm_matches_closed_form(rng):
    beta = 0.3
    coeffs = example_coefficients(ExampleParams(alpha=1.0, beta=beta, gamma=0.1))
    pts = rng.uniform(-1.0, 1.0, size=(200, 3))
    pts = pts[np.linalg.norm(pts, axis=1) > 0.05]
    expected = np.sqrt(6.0) * beta / np.linalg.norm(pts, axis=1)
    analytic = grad_sigma_norm(coeffs, pts)
    np.testing.assert_allclose(analytic, expected, rtol=1e-6)

    fd = coeffs.sigma.finite_difference_jacobian(pts)
    fd_norm = np.sqrt(np.sum(fd.reshape(pts.shape[0], -1) ** 2, axis=1))
    np.testing.assert_allclose(fd_norm, expected, rtol=1e-4)


def test_grad_sigma_norm_is_infinite_at_origin():
    coeffs = example_coefficients(ExampleParams())
    assert np.isinf(grad_sigma_norm(coeffs, [0.0, 0.0, 0.0]))


def test_constant_coefficients_default_to_brownian_motion():
    coeffs = constant_coefficients()
    assert coeffs.dim_d == 3 and coeffs.dim_d1 == 3
    np.testing.assert_allclose(coeffs.diffusion([0.2, 0.4, 0.1]), np.eye(3))
    np.testing.assert_allclose(coeffs.drift([[1.0, 2.0, 3.0]]), np.zeros((1, 3)))
    assert coeffs.delta == 1.0
    assert coeffs.smooth


def test_coefficient_set_rejects_low_dimension():
    with pytest.raises(PreconditionError):
        constant_coefficients(dim=2)


def test_inverse_radial_field_values():
    field = InverseRadialField(dim=3)
    values = field(np.array([[0.5, 0.0, 0.0], [0.0, 0.25, 0.0], [2.0, 0.0, 0.0]]))
    np.testing.assert_allclose(values, [2.0, 4.0, 0.0])


@pytest.mark.parametrize(
    "kind, base, scales",
    [
        ("example", "example", []),
        ("mollified(example, 8)", "example", [8]),
        ("mollified(mollified(remark24, 4), 16)", "remark24", [4, 16]),
    ],
)
def test_parse_kind(kind, base, scales):
    assert parse_kind(kind) == (base, scales)


def test_registry_builds_coefficients_and_components():
    registry = get_field_registry()
    coeffs = registry.build_coefficients({"kind": "example", "alpha": 1.0, "beta": 0.3, "gamma": 0.1})
    assert coeffs.name == "example"
    drift = registry.build_field({"kind": "example"}, component="drift")
    assert drift.value_shape == (3,)
    a = registry.build_field({"kind": "constant"}, component="a")
    np.testing.assert_allclose(a([0.0, 0.0, 0.0]), np.eye(3))


def test_registry_rejects_unknown_kind():
    with pytest.raises(ConfigError, match="unknown field kind"):
        get_field_registry().build({"kind": "nonsense"})


def test_registry_rejects_single_field_as_coefficients():
    with pytest.raises(ConfigError):
        get_field_registry().build_coefficients({"kind": "inverse-radial"})


def test_mollified_coefficients_are_smooth():
    coeffs = example_coefficients(ExampleParams(alpha=1.0, beta=0.3, gamma=0.1))
    assert not coeffs.smooth
    smooth = coeffs.mollified(8)
    assert smooth.smooth
    assert np.all(np.isfinite(smooth.drift(np.zeros((1, 3)))))


def test_remark24_params_reject_bad_exponent():
    with pytest.raises(PreconditionError):
        Remark24Params(q=1.5, dim=3)


def test_remark24_rule_with_oversized_scale_is_rejected():
    params = Remark24Params(q=2.5, radii_rule=RadiiRule.GEOMETRIC, scale=10.0)
    with pytest.raises(RadiiRuleError):
        remark24_lp_mass(params, p=2.8, n_max=10)


def test_remark24_mass_grows_above_q():
    params = Remark24Params(q=2.5, dim=3)
    small = remark24_lp_mass(params, p=2.8, n_max=1000)
    large = remark24_lp_mass(params, p=2.8, n_max=1_000_000)
    assert large >= 10.0 * small


def test_remark24_mass_is_monotone_in_truncation():
    params = Remark24Params(q=2.5, dim=3)
    masses = [remark24_lp_mass(params, p=2.0, n_max=n) for n in (10, 100, 1000)]
    assert masses[0] < masses[1] < masses[2]


def test_bump_chain_geometry():
    drift, report = remark24_drift(Remark24Params(q=2.5, dim=3, n_max=200))
    assert report.disjoint
    assert report.max_partial_sum <= 0.5 + 1e-12
    assert np.all(np.diff(report.centers) < 0.0)
    assert report.edges[0] == 1.0
    np.testing.assert_allclose(report.rho, report.radii ** 0.5)

    k = 3
    centre, r = report.centers[k], report.radii[k]
    points = np.array([[centre, 0.5 * r, 0.0], [centre, 2.0 * r, 0.0], [-0.5, 0.0, 0.0]])
    np.testing.assert_allclose(drift(points), [2.0 / r, 0.0, 0.0])


def test_mollifying_a_constant_returns_it():
    field = ConstantField(2.0, 3)
    assert mollify(field, MollifierSpec(4)) is field


def test_mollified_inverse_radial_keeps_harmonic_values():
    smooth = mollify(InverseRadialField(dim=3), MollifierSpec(4))
    values = smooth(np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]))
    # 1/|x| is harmonic away from the origin, so the radial kernel reproduces it
    assert values[0] == pytest.approx(2.0, rel=2e-2)
    assert np.isfinite(values[1]) and values[1] > 0.0
    assert values[2] == 0.0


def test_mollifier_spec_validation():
    with pytest.raises(ValueError):
        MollifierSpec(0)
    with pytest.raises(ValueError):
        MollifierSpec(4, angular_nodes=7)
    assert MollifierSpec(8).support_radius == 0.125


def test_example_drift_spot_values():
    drift = example_drift(ExampleParams(gamma=1.0))
    np.testing.assert_allclose(drift([0.5, 0.0, 0.0]), [-2.0, 0.0, 0.0])
    np.testing.assert_allclose(drift([0.0, -0.25, 0.0]), [0.0, 4.0, 0.0])
    np.testing.assert_allclose(drift([2.0, 0.0, 0.0]), [0.0, 0.0, 0.0])
