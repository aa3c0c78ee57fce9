import numpy as np
import pytest

from app.core.exceptions import ConfigError
from app.utils.hashing import hash_mod, keyed_hash
from app.utils.rng import Stream, derive_seed, make_rng


def test_streams_are_reproducible():
    first = make_rng(42, Stream.PERTURB).random(5)
    second = make_rng(42, Stream.PERTURB).random(5)
    np.testing.assert_array_equal(first, second)


def test_streams_are_independent():
    perturb = make_rng(42, Stream.PERTURB).random(5)
    layer = make_rng(42, Stream.LAYER).random(5)
    assert not np.allclose(perturb, layer)
    assert derive_seed(42, Stream.CELL, 0) != derive_seed(42, Stream.CELL, 1)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ConfigError):
        make_rng(seed)


def test_keyed_hash_depends_on_key():
    values = np.arange(1000, dtype=np.uint64)
    assert np.count_nonzero(keyed_hash(values, 1) == keyed_hash(values, 2)) == 0
    np.testing.assert_array_equal(keyed_hash(values, 7), keyed_hash(values, 7))


def test_hash_mod_is_roughly_uniform():
    buckets = hash_mod(np.arange(100_000, dtype=np.uint64), 12345, 10)
    assert buckets.min() == 0 and buckets.max() == 9
    counts = np.bincount(buckets, minlength=10)
    assert np.all(np.abs(counts - 10_000) < 500)
