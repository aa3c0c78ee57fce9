"""
Векторизованное ключевое 64-битное хэширование.

Агрегация OLH вычисляет хэш каждого значения домена для каждого пользователя,
поэтому хэш считается над массивами numpy, а не по одному значению.
"""

import numpy as np

# xxhash хэширует по одному буферу за вызов; почему здесь splitmix64, см. DESIGN.md
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x) -> np.ndarray:
    """Финализатор splitmix64 над uint64"""
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def keyed_hash(values, keys) -> np.ndarray:
    """
    Хэш значения под ключом пользователя, с broadcasting.

    Args:
        values: Значения (неотрицательные целые)
        keys: Ключи хэш-функций (uint64)

    Returns:
        np.ndarray[uint64]
    """
    return splitmix64(np.asarray(values, dtype=np.uint64) ^ splitmix64(keys))


def hash_mod(values, keys, modulus: int) -> np.ndarray:
    """Ключевой хэш, приведенный по модулю, как int64"""
    return (keyed_hash(values, keys) % np.uint64(modulus)).astype(np.int64)
