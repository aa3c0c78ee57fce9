import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from app.core.exceptions import ConfigError, DomainError
from app.schemas.privacy import DiscreteSwParams
from app.services.wave import (
    discrete_b,
    gw_perturb,
    gw_perturb_batch,
    mutual_info_bound,
    optimal_b,
    output_cdf,
    output_wasserstein,
    separation_distance,
    shape_catalog,
    sw_params,
    sw_perturb,
    sw_perturb_batch,
    sw_perturb_discrete,
    sw_perturb_discrete_batch,
    wave_shape,
)


@pytest.mark.parametrize("epsilon, expected", [(1, 0.256), (2, 0.129), (3, 0.064), (4, 0.030)])
def test_optimal_b_values(epsilon, expected):
    assert optimal_b(epsilon) == pytest.approx(expected, abs=1e-3)


def test_optimal_b_small_epsilon_limit():
    assert optimal_b(1e-9) == 0.5
    assert optimal_b(1e-3) == pytest.approx(0.5, abs=1e-3)


def test_optimal_b_maximizes_bound():
    b = optimal_b(2.0)
    best = mutual_info_bound(b, 2.0)
    assert best >= mutual_info_bound(b - 0.01, 2.0)
    assert best >= mutual_info_bound(b + 0.01, 2.0)


def test_discrete_b():
    assert discrete_b(1.0, 256) == 65


def test_sw_reports_stay_in_output_domain():
    params = sw_params(1.0)
    reports = sw_perturb_batch(np.linspace(0, 1, 10_000), params, seed=0)
    assert reports.min() >= -params.b
    assert reports.max() <= 1 + params.b
    assert sw_perturb(0.3, params, seed=1) == sw_perturb(0.3, params, seed=1)


def test_sw_rejects_out_of_domain():
    with pytest.raises(DomainError):
        sw_perturb_batch([0.5, 1.2], sw_params(1.0), seed=0)


def test_sw_plateau_mass():
    params = sw_params(1.0)
    reports = sw_perturb_batch(np.full(200_000, 0.5), params, seed=2)
    inside = np.mean(np.abs(reports - 0.5) <= params.b)
    assert inside == pytest.approx(2 * params.b * params.p, abs=0.01)


def test_sw_without_plateau_is_uniform():
    reports = sw_perturb_batch(np.full(20_000, 0.9), sw_params(1.0, b=0.0), seed=3)
    assert stats.kstest(reports, "uniform").pvalue > 1e-3


def test_discrete_sw_window_mass():
    params = DiscreteSwParams(epsilon=1.0, d=32, b=4)
    reports = sw_perturb_discrete_batch(np.full(100_000, 10), params, seed=4)
    assert reports.min() >= 0 and reports.max() < params.d_out
    inside = np.mean((reports >= 10) & (reports <= 18))
    assert inside == pytest.approx(9 * params.p, abs=0.01)


def test_square_shape_matches_sw_levels():
    params = sw_params(1.0)
    shape = wave_shape("square", 1.0)
    assert shape.q == pytest.approx(params.q, rel=1e-9)
    assert shape.peak == pytest.approx(params.p, rel=1e-9)


@pytest.mark.parametrize("kind, ratio", [("trapezoid", 0.2), ("trapezoid", 0.6), ("triangle", None)])
def test_wave_shapes_are_normalized(kind, ratio):
    shape = wave_shape(kind, 2.0, ratio=ratio)
    assert shape.peak == pytest.approx(math.exp(2.0) * shape.q)
    total, _ = quad(shape.density, shape.lo, shape.hi, points=[-shape.b, 0.0, shape.b], limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_wave_shape_rejects_missing_ratio():
    with pytest.raises(ConfigError):
        wave_shape("trapezoid", 1.0)


def test_wave_shape_rejects_infeasible_level():
    with pytest.raises(ConfigError):
        wave_shape("square", 1.0, q=0.01)


def test_shape_catalog():
    shapes = shape_catalog(1.0)
    assert [shape.kind for shape in shapes] == ["square"] + ["trapezoid"] * 4 + ["triangle"]
    assert len({shape.b for shape in shapes}) == 1


def test_equal_area_catalog():
    b = optimal_b(1.0)
    square, *trapezoids, triangle = shape_catalog(1.0, equal_area=True)
    assert square.b == pytest.approx(b)
    assert triangle.b == pytest.approx(2 * b)
    for shape in [*trapezoids, triangle]:
        assert shape.excess_area == pytest.approx(square.excess_area)
        assert shape.b > square.b
        assert shape.excess_mass < square.excess_mass
        assert shape.total_mass == pytest.approx(1.0)


@pytest.mark.parametrize("kind, ratio", [("square", None), ("trapezoid", 0.2), ("trapezoid", 0.8), ("triangle", None)])
@pytest.mark.parametrize("epsilon", [0.5, 1.0, 3.0])
def test_wave_density_bounds(kind, ratio, epsilon):
    shape = wave_shape(kind, epsilon, ratio=ratio)
    outside = np.array([-1.5, -shape.b - 1e-9, shape.b + 1e-9, 1.5])
    np.testing.assert_allclose(shape.density(outside), shape.q)
    inside = np.linspace(-shape.b, shape.b, 101)
    density = shape.density(inside)
    assert np.all(density >= shape.q - 1e-15)
    assert np.all(density <= math.exp(epsilon) * shape.q * (1 + 1e-12))
    assert shape.density(0.0) == pytest.approx(shape.peak)
    profile = shape.profile(np.concatenate([inside, outside]))
    assert np.all((profile >= 0) & (profile <= 1))


@pytest.mark.parametrize(
    "kind, ratio", [("triangle", 0.0), ("trapezoid", 0.2), ("trapezoid", 0.5), ("trapezoid", 0.8), ("square", 1.0)]
)
def test_profile_area_closed_form(kind, ratio):
    shape = wave_shape(kind, 1.0, 0.3, ratio=ratio)
    corners = sorted({c for c in (-0.3 * ratio, 0.0, 0.3 * ratio) if abs(c) < 0.3})
    area, _ = quad(shape.profile, -0.3, 0.3, points=corners, epsabs=1e-12)
    assert shape.excess_area == pytest.approx(area, abs=1e-9)
    assert shape.excess_area == pytest.approx(0.3 * (1 + ratio))


@pytest.mark.parametrize("epsilon", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("b", [0.1, 0.256, 0.5])
def test_square_has_lowest_floor_at_fixed_width(epsilon, b):
    square = wave_shape("square", epsilon, b)
    assert square.q == pytest.approx(1 / (2 * b * math.exp(epsilon) + 1))
    others = [wave_shape("trapezoid", epsilon, b, ratio=r) for r in (0.2, 0.4, 0.6, 0.8)]
    others.append(wave_shape("triangle", epsilon, b))
    assert all(square.q < shape.q for shape in others)


def test_square_wave_matches_sw_distribution():
    params = sw_params(1.0)
    square = wave_shape("square", 1.0)
    values = np.full(50_000, 0.3)
    general = gw_perturb_batch(values, square, seed=10)
    classic = sw_perturb_batch(values, params, seed=11)
    assert stats.ks_2samp(general, classic).pvalue > 1e-3


def test_trapezoid_plateau_density():
    shape = wave_shape("trapezoid", 1.0, ratio=0.6)
    reports = gw_perturb_batch(np.full(200_000, 0.5), shape, seed=12)
    top = shape.ratio * shape.b
    inside = np.mean(np.abs(reports - 0.5) <= top)
    assert inside == pytest.approx(shape.peak * 2 * top, abs=0.01)


def test_output_cdf_is_distribution():
    shape = wave_shape("triangle", 1.0)
    assert output_cdf(shape, 0.3, shape.lo) == pytest.approx(0.0, abs=1e-12)
    assert output_cdf(shape, 0.3, shape.hi) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kind, ratio", [("square", None), ("trapezoid", 0.4), ("triangle", None)])
def test_wasserstein_equals_separation(kind, ratio):
    shape = wave_shape(kind, 1.0, ratio=ratio)
    assert output_wasserstein(shape, 0.2, 0.5) == pytest.approx(separation_distance(shape, 0.3), abs=1e-9)


@pytest.mark.slow
def test_wasserstein_monte_carlo():
    params = sw_params(1.0)
    shape = wave_shape("square", 1.0)
    first = sw_perturb_batch(np.full(1_000_000, 0.2), params, seed=20)
    second = sw_perturb_batch(np.full(1_000_000, 0.5), params, seed=21)
    empirical = stats.wasserstein_distance(first, second)
    assert empirical == pytest.approx(separation_distance(shape, 0.3), rel=0.01)


def test_single_user_wave_reports_stay_in_range():
    shape = wave_shape("trapezoid", 1.0, ratio=0.4)
    for seed in range(20):
        assert shape.lo <= gw_perturb(0.7, shape, seed) <= shape.hi

    params = DiscreteSwParams(epsilon=1.0, d=16, b=3)
    reports = [sw_perturb_discrete(15, params, seed) for seed in range(20)]
    assert all(0 <= report < params.d_out for report in reports)
    assert sw_perturb_discrete(15, params, 4) == int(sw_perturb_discrete_batch(np.array([15]), params, 4)[0])
