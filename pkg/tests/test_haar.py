import numpy as np
import pytest

from app.core.exceptions import DomainError
from app.schemas.histogram import BucketSpec, Mechanism, ReportBatch
from app.schemas.privacy import PrivacyParams
from app.services.bucketing import bucket_indices, true_histogram
from app.services.haar import (
    haar_coefficients,
    haar_forward,
    haar_height,
    haar_inverse,
    haar_perturb_batch,
    haar_reconstruct,
    haar_report,
)
from app.services.metrics import range_query_mae


@pytest.mark.parametrize("d, height", [(1, 1), (2, 1), (5, 3), (16, 4)])
def test_height(d, height):
    assert haar_height(d) == height


def test_forward_coefficients():
    tree = haar_forward([1.0, 0.0])
    assert tree.total == pytest.approx(1.0)
    assert tree.coefficients[0][0] == pytest.approx(1 / np.sqrt(2))
    assert haar_forward([0.5, 0.5]).coefficients[0][0] == pytest.approx(0.0)


def test_inverse_recovers_leaves():
    leaves = np.random.default_rng(0).dirichlet(np.ones(8))
    np.testing.assert_allclose(haar_inverse(haar_forward(leaves)), leaves, atol=1e-12)


def test_forward_requires_power_of_two():
    with pytest.raises(DomainError):
        haar_forward([0.2, 0.3, 0.5])


def test_two_buckets_are_exact_without_noise():
    params = PrivacyParams(epsilon=50.0)
    values = np.array([0] * 30 + [1] * 70)
    leaves = haar_reconstruct(haar_perturb_batch(values, 2, params, seed=1), 2, params)
    np.testing.assert_allclose(leaves.values, [0.3, 0.7], atol=1e-12)


def test_report_shape():
    layer, row, sign = haar_report(5, 8, PrivacyParams(epsilon=1.0), seed=2)
    assert 1 <= layer <= 3
    assert 0 <= row < 1 << (3 - layer)
    assert sign in (-1, 1)


def test_range_queries_on_beta(beta_values):
    params = PrivacyParams(epsilon=2.0)
    indices = bucket_indices(beta_values, BucketSpec(d=16))
    leaves = haar_reconstruct(haar_perturb_batch(indices, 16, params, seed=3), 16, params)
    assert leaves.values.sum() == pytest.approx(1.0)
    assert range_query_mae(true_histogram(beta_values, 16), leaves, 0.25, exhaustive=True) < 0.05


def test_empty_layer_gives_zero_coefficients(caplog):
    batch = ReportBatch(
        mechanism=Mechanism.HAAR,
        epsilon=1.0,
        values=np.ones(4, dtype=np.int64),
        rows=np.zeros(4, dtype=np.int64),
        layers=np.ones(4, dtype=np.int64),
    )
    tree = haar_coefficients(batch, 4, PrivacyParams(epsilon=1.0))
    np.testing.assert_array_equal(tree.coefficients[1], [0.0])
    assert "не попал ни один пользователь" in caplog.text
