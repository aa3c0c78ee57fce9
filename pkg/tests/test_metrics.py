import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from app.core.exceptions import ConfigError
from app.schemas.histogram import Histogram
from app.services.metrics import (
    ks_distance,
    mean_of,
    prefix_answer,
    quantile,
    quantiles_mae,
    range_bounds,
    range_query_errors,
    range_query_mae,
    variance_of,
    wasserstein,
)


def _point(index: int, d: int) -> Histogram:
    return Histogram(values=np.eye(d)[index], normalized=True)


def _uniform(d: int) -> Histogram:
    return Histogram(values=np.full(d, 1 / d), normalized=True)


simplex = arrays(np.float64, 16, elements=st.floats(0.001, 1.0)).map(
    lambda values: Histogram(values=values / values.sum(), normalized=True)
)


def test_point_masses():
    assert wasserstein(_point(0, 10), _point(9, 10)) == pytest.approx(0.9)
    assert ks_distance(_point(0, 10), _point(9, 10)) == pytest.approx(1.0)


@given(simplex, simplex, simplex)
def test_distance_axioms(x, y, z):
    for distance in (wasserstein, ks_distance):
        assert distance(x, x) == pytest.approx(0.0, abs=1e-12)
        assert distance(x, y) == pytest.approx(distance(y, x))
        assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-12


def test_length_mismatch():
    with pytest.raises(ConfigError):
        wasserstein(_uniform(4), _uniform(8))


def test_range_bounds():
    assert range_bounds(0.2, 0.1, 10) == (2, 3)
    assert range_bounds(0.85, 0.4, 10) == (8, 10)


def test_exhaustive_range_queries():
    x = _uniform(10)
    errors = range_query_errors(x, prefix_answer(_point(0, 10)), 0.2)
    assert errors.size == 9
    assert errors[0] == pytest.approx(0.8)
    assert errors[1] == pytest.approx(0.2)


def test_range_query_mae_identity():
    x = _uniform(32)
    assert range_query_mae(x, x, 0.1, trials=200, seed=1) == pytest.approx(0.0)
    with pytest.raises(ConfigError):
        range_query_mae(x, x, 1.5)


def test_moments():
    assert mean_of(_uniform(10)) == pytest.approx(0.5)
    assert variance_of(_point(3, 10)) == pytest.approx(0.0)
    assert variance_of(Histogram(values=[0.5, 0.0, 0.0, 0.5], normalized=True)) == pytest.approx(0.375**2)


def test_quantiles():
    assert quantile(_uniform(10), 0.5) == pytest.approx(0.45)
    assert quantile(_point(0, 10), 0.1) == pytest.approx(0.05)
    assert quantiles_mae(_uniform(10), _uniform(10)) == 0.0
