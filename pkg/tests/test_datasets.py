import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import DatasetParseError, DatasetReadError, EmptyDatasetError
from app.schemas.experiment import DatasetSpec
from app.services.datasets import load_dataset, read_values_csv


def _csv(tmp_path, text: str):
    path = tmp_path / "values.csv"
    path.write_text(text)
    return path


def test_beta_is_deterministic():
    spec = DatasetSpec(n=100_000)
    first = load_dataset(spec, seed=3)
    np.testing.assert_array_equal(first, load_dataset(spec, seed=3))
    assert first.min() >= 0 and first.max() <= 1
    sigma = np.sqrt(10 / (49 * 8) / spec.n)
    assert abs(first.mean() - 5 / 7) < 3 * sigma
    assert spec.bucket_count == 256


def test_header_is_detected(tmp_path):
    np.testing.assert_allclose(read_values_csv(_csv(tmp_path, "value\n0.1\n0.2\n")), [0.1, 0.2])
    np.testing.assert_allclose(read_values_csv(_csv(tmp_path, "0.3\n0.4\n")), [0.3, 0.4])


def test_income_filter(tmp_path):
    path = _csv(tmp_path, "income\n100\n600000\n524288\n262144\n")
    spec = DatasetSpec(name="income", source="csv", path=path, preset="income")
    np.testing.assert_allclose(load_dataset(spec, seed=0), [100 / 2**19, 0.5])
    assert spec.bucket_count == 1024


def test_retirement_filter(tmp_path):
    path = _csv(tmp_path, "-100\n30000\n60000\n")
    spec = DatasetSpec(name="retirement", source="csv", path=path, preset="retirement")
    np.testing.assert_allclose(load_dataset(spec, seed=0), [0.5])


def test_taxi_divides_by_day(tmp_path):
    path = _csv(tmp_path, "43200\n0\n")
    spec = DatasetSpec(name="taxi", source="csv", path=path, preset="taxi")
    np.testing.assert_allclose(load_dataset(spec, seed=0), [0.5, 0.0])


def test_custom_filter(tmp_path):
    path = _csv(tmp_path, "5\n10\n15\n20\n")
    spec = DatasetSpec(source="csv", path=path, filter_lo=10, filter_hi=20)
    np.testing.assert_allclose(load_dataset(spec, seed=0), [0.0, 0.5])


def test_non_numeric_row(tmp_path):
    spec = DatasetSpec(source="csv", path=_csv(tmp_path, "0.1\nabc\n0.3\n"))
    with pytest.raises(DatasetParseError):
        load_dataset(spec, seed=0)


def test_values_outside_unit_interval_need_a_filter(tmp_path):
    spec = DatasetSpec(source="csv", path=_csv(tmp_path, "0.1\n3.0\n"))
    with pytest.raises(DatasetParseError):
        load_dataset(spec, seed=0)


def test_empty_after_filter(tmp_path):
    spec = DatasetSpec(source="csv", path=_csv(tmp_path, "700000\n"), preset="income")
    with pytest.raises(EmptyDatasetError):
        load_dataset(spec, seed=0)


def test_missing_file(tmp_path):
    spec = DatasetSpec(source="csv", path=tmp_path / "missing.csv")
    with pytest.raises(DatasetReadError):
        load_dataset(spec, seed=0)


def test_subsample():
    spec = DatasetSpec(n=5000, subsample=True, max_users=1000)
    assert load_dataset(spec, seed=1).size == 1000


def test_spec_validation():
    with pytest.raises(ValidationError):
        DatasetSpec(source="csv")
    with pytest.raises(ValidationError):
        DatasetSpec(filter_lo=1.0)
