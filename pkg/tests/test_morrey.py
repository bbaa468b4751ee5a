import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import PreconditionError
from estimates.types import Verdict
from fields.base import ConstantField, Field
from fields.mollify import MollifierSpec, mollify
from fields.radial import InverseRadialField
from morrey.balls import Ball, lattice_centers, radius_ladder, singular_centers
from morrey.embedding import default_p, embedding_check
from morrey.norms import SearchBudget, ball_avg_norm, morrey_norm
from morrey.oscillation import oscillation, sharp_oscillation
from morrey.quadrature import ball_integral, ball_rule

SMALL = SearchBudget(nodes=1024, depth=4, lattice_cap=27, singular_cap=4, refine_rounds=2)


def test_ball_rejects_non_positive_radius():
    with pytest.raises(ValueError):
        Ball.at([0.0, 0.0, 0.0], 0.0)


def test_ball_seed_depends_only_on_geometry():
    a = Ball.at([0.1, 0.2, 0.3], 0.5)
    b = Ball.at(np.array([0.1, 0.2, 0.3]), 0.5)
    assert a.seed() == b.seed()
    assert a.seed(salt=1) != a.seed()


def test_radius_ladder_halves():
    np.testing.assert_allclose(radius_ladder(1.0, 3), [1.0, 0.5, 0.25, 0.125])


def test_lattice_is_thinned_but_keeps_region_centre():
    centers, thinned = lattice_centers(np.zeros(3), 1.0, 0.1, cap=27)
    assert thinned
    assert centers.shape == (27, 3)
    assert np.any(np.all(centers == 0.0, axis=1))


def test_singular_centres_offset_along_every_axis():
    centers = singular_centers(np.zeros((1, 3)), 0.4, cap=4)
    assert centers.shape == (7, 3)
    assert np.count_nonzero(np.linalg.norm(centers, axis=1) == pytest.approx(0.2)) == 6


def test_volume_of_unit_ball_in_three_dimensions():
    assert Ball.at([0.0, 0.0, 0.0], 1.0).volume == pytest.approx(4.0 * np.pi / 3.0)


def test_quadrature_integrates_constants_over_the_ball():
    ball = Ball.at([0.0, 0.0, 0.0], 1.0)
    value, excluded = ball_integral(lambda x: np.ones(x.shape[0]), ball, nodes=1024)
    assert excluded == 0
    assert value == pytest.approx(ball.volume, rel=1e-12)


def test_off_centre_pole_still_averages_constants():
    ball = Ball.at([0.0, 0.0, 0.0], 1.0)
    rule = ball_rule(ball, 4096, singular_points=np.array([[0.4, 0.0, 0.0]]), exponent=2.0)
    np.testing.assert_allclose(rule.pole, [0.4, 0.0, 0.0])
    mean, _ = rule.average(np.ones(rule.points.shape[0]))
    assert mean == pytest.approx(1.0, rel=5e-2)


def test_singular_ball_average_is_exact_for_inverse_distance():
    field = InverseRadialField(3)
    for rho in (1.0, 0.25, 0.01):
        assert ball_avg_norm(field, Ball.at([0.0, 0.0, 0.0], rho), q=2.0, nodes=256) == pytest.approx(
            np.sqrt(3.0) / rho, rel=1e-9
        )


def test_ball_avg_norm_rejects_exponent_below_one():
    with pytest.raises(PreconditionError):
        ball_avg_norm(ConstantField(1.0, 3), Ball.at([0.0, 0.0, 0.0], 1.0), q=0.5)


def test_morrey_norm_of_constant_is_horizon_times_value():
    report = morrey_norm(ConstantField(2.0, 3), q=2.0, R0=0.5, search=SMALL)
    assert report.value == pytest.approx(1.0, rel=1e-9)
    assert report.witness.radius == pytest.approx(0.5)


def test_morrey_norm_of_inverse_distance_is_sqrt_three():
    report = morrey_norm(InverseRadialField(3), q=2.0, R0=1.0, search=SMALL)
    assert report.value == pytest.approx(np.sqrt(3.0), rel=2e-2)
    assert report.samples
    assert report.to_dict()["budget"]["nodes"] == SMALL.nodes


@given(scale=st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=10, deadline=None)
def test_morrey_norm_is_homogeneous(scale):
    budget = SearchBudget(nodes=256, depth=2, lattice_cap=8, singular_cap=2, refine_rounds=1)
    base = morrey_norm(InverseRadialField(3), q=2.0, R0=1.0, search=budget).value
    scaled = morrey_norm(InverseRadialField(3, scale=scale), q=2.0, R0=1.0, search=budget).value
    assert scaled == pytest.approx(scale * base, rel=1e-9)


@pytest.mark.parametrize("q, R0", [(1.0, 1.0), (3.5, 1.0), (2.0, 0.0), (2.0, -1.0)])
def test_morrey_norm_preconditions(q, R0):
    with pytest.raises(PreconditionError):
        morrey_norm(ConstantField(1.0, 3), q=q, R0=R0, search=SMALL)


def test_morrey_norm_is_deterministic():
    field = InverseRadialField(3, center=[0.2, 0.0, 0.0])
    first = morrey_norm(field, q=2.0, R0=1.0, search=SMALL)
    second = morrey_norm(field, q=2.0, R0=1.0, search=SMALL)
    assert first.value == second.value
    assert first.rows() == second.rows()


def test_constant_matrix_has_no_oscillation():
    a = ConstantField(2.0 * np.eye(3), 3)
    assert oscillation(a, Ball.at([0.3, 0.0, -0.1], 0.7), pairs=256) == 0.0
    report = sharp_oscillation(a, 0.5, search=SearchBudget(nodes=256, depth=2, lattice_cap=8))
    assert report.value == 0.0
    assert report.witness.radius <= 0.5


def test_embedding_exponent_preconditions():
    field = InverseRadialField(3)
    assert default_p(3, 3.0) == pytest.approx(2.75)
    with pytest.raises(PreconditionError):
        embedding_check(field, q=2.0, b_norm=1.0)
    with pytest.raises(PreconditionError):
        embedding_check(field, q=2.0, p=1.0, b_norm=1.0)
    with pytest.raises(PreconditionError):
        embedding_check(field, q=4.0, p=2.0, b_norm=1.0)


def test_embedding_check_with_a_known_norm():
    report = embedding_check(InverseRadialField(3), q=2.0, p=1.5, search=SMALL, b_norm=np.sqrt(3.0))
    assert report.name == "embedding"
    assert [pr.label for pr in report.probes] == ["u0", "u1", "u2"]
    assert report.fits["morrey_norm"] == pytest.approx(np.sqrt(3.0))
    assert np.isfinite(report.fitted_constant) and report.fitted_constant > 0.0
    assert report.verdict in (Verdict.PASS, Verdict.FAIL)


def test_embedding_of_a_vanishing_field_passes():
    report = embedding_check(ConstantField(np.zeros(3), 3), q=2.0, p=1.5, search=SMALL, b_norm=0.0)
    assert report.verdict == Verdict.PASS
    assert report.fitted_constant == 0.0


class _Dilated(Field):
    """lam * v(lam x)."""

    def __init__(self, inner, lam):
        super().__init__(
            dim=inner.dim,
            value_shape=inner.value_shape,
            singular_points=inner.singular_points / lam,
            roi_center=inner.roi_center / lam,
            roi_radius=inner.roi_radius / lam,
        )
        self.inner = inner
        self.lam = lam

    def _evaluate(self, points):
        return self.lam * self.inner(self.lam * points)


class _SignSplit(Field):
    """diag(1 + sign(x1) eps, 1, 1)."""

    def __init__(self, eps):
        super().__init__(dim=3, value_shape=(3, 3))
        self.eps = eps

    def _evaluate(self, points):
        out = np.broadcast_to(np.eye(3), (points.shape[0], 3, 3)).copy()
        out[:, 0, 0] += np.sign(points[:, 0]) * self.eps
        return out


def test_morrey_norm_is_monotone_in_the_field():
    small = InverseRadialField(3, radius=0.5)
    large = InverseRadialField(3, radius=1.0, scale=1.5)
    points = np.random.default_rng(3).uniform(-1.0, 1.0, size=(2000, 3))
    assert np.all(small(points) <= large(points))
    assert morrey_norm(small, 2.0, 1.0, search=SMALL).value <= morrey_norm(large, 2.0, 1.0, search=SMALL).value


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_morrey_norm_is_invariant_under_dilation(lam):
    field = InverseRadialField(3, center=[0.2, 0.0, 0.0])
    base = morrey_norm(field, q=2.0, R0=1.0, search=SMALL).value
    dilated = morrey_norm(_Dilated(field, lam), q=2.0, R0=1.0 / lam, search=SMALL).value
    assert dilated == pytest.approx(base, rel=1e-2)


@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_oscillation_across_a_jump_equals_its_height(eps):
    # half the pairs straddle x1 = 0 and differ by 2 eps
    value = oscillation(_SignSplit(eps), Ball.at([0.0, 0.0, 0.0], 0.5), pairs=4096)
    assert value == pytest.approx(eps, rel=5e-2)


def test_mollification_preserves_positivity():
    smooth = mollify(InverseRadialField(3, center=[0.3, 0.0, 0.0]), MollifierSpec(4))
    points = np.random.default_rng(11).uniform(-1.5, 1.5, size=(500, 3))
    values = smooth(points)
    assert np.all(np.isfinite(values))
    assert np.all(values >= 0.0)
    assert values.max() > 0.0
