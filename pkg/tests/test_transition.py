import numpy as np
import pytest

from app.schemas.histogram import BucketSpec
from app.schemas.privacy import DiscreteSwParams
from app.services.bucketing import histogram_counts
from app.services.transition import (
    build_discrete_transition_matrix,
    build_transition_matrix,
    build_wave_transition_matrix,
)
from app.services.wave import sw_params, sw_perturb_batch, wave_shape


def test_square_matrix_is_column_stochastic():
    M = build_transition_matrix(sw_params(1.0), 16, 24)
    assert M.matrix.shape == (24, 16)
    np.testing.assert_allclose(M.matrix.sum(axis=0), 1.0)
    assert M.output_spec.domain_lo == pytest.approx(-sw_params(1.0).b)


def test_square_matrix_matches_monte_carlo():
    params = sw_params(1.0)
    d, n = 8, 200_000
    M = build_transition_matrix(params, d)
    rng = np.random.default_rng(0)
    for column in (0, 3, 7):
        inputs = (column + rng.random(n)) / d
        reports = sw_perturb_batch(inputs, params, seed=column)
        frequency = histogram_counts(reports, M.output_spec, tolerance=1e-9) / n
        sigma = np.sqrt(M.matrix[:, column] * (1 - M.matrix[:, column]) / n)
        assert np.all(np.abs(frequency - M.matrix[:, column]) < 4 * sigma + 1e-12)


def test_zero_half_width_gives_uniform_matrix():
    M = build_transition_matrix(sw_params(1.0, b=0.0), 4, 5)
    np.testing.assert_allclose(M.matrix, 0.2)


def test_discrete_matrix():
    params = DiscreteSwParams(epsilon=1.0, d=6, b=1)
    M = build_discrete_transition_matrix(params)
    assert M.matrix.shape == (8, 6)
    np.testing.assert_allclose(M.matrix.sum(axis=0), 1.0)
    assert M.matrix[2, 1] == pytest.approx(params.p)
    assert M.matrix[5, 1] == pytest.approx(params.q)


def test_wave_matrix_square_specialization():
    shape = wave_shape("square", 2.0)
    np.testing.assert_allclose(
        build_wave_transition_matrix(shape, 12).matrix,
        build_transition_matrix(sw_params(2.0), 12).matrix,
        atol=1e-12,
    )


@pytest.mark.parametrize("kind, ratio", [("trapezoid", 0.4), ("triangle", None)])
def test_wave_matrix_for_other_shapes(kind, ratio):
    M = build_wave_transition_matrix(wave_shape(kind, 1.0, ratio=ratio), 10, 14)
    assert np.all(M.matrix >= 0)
    np.testing.assert_allclose(M.matrix.sum(axis=0), 1.0)
    # столбцы сдвигаются вместе с входным бакетом
    assert np.argmax(M.matrix[:, 0]) < np.argmax(M.matrix[:, 9])


def test_output_spec_matches_reports():
    M = build_transition_matrix(sw_params(1.0), 4)
    assert isinstance(M.output_spec, BucketSpec)
    assert M.output_spec.d == 4


@pytest.mark.parametrize("kind, ratio", [("square", None), ("trapezoid", 0.6), ("triangle", None)])
@pytest.mark.parametrize("d, d_out", [(8, 8), (16, 24), (7, 11)])
def test_wave_matrix_mirror_symmetry(kind, ratio, d, d_out):
    M = build_wave_transition_matrix(wave_shape(kind, 1.0, ratio=ratio), d, d_out)
    np.testing.assert_allclose(M.matrix, M.matrix[::-1, ::-1], atol=1e-12)


def test_discrete_matrix_mirror_symmetry():
    M = build_discrete_transition_matrix(DiscreteSwParams(epsilon=2.0, d=12, b=2))
    np.testing.assert_allclose(M.matrix, M.matrix[::-1, ::-1])
