"""
Сидируемые генераторы случайных чисел.

Все рандомизированные операции берут поток Philox из (seed, тег потока, ...),
поэтому результат не зависит от порядка выполнения ячеек эксперимента.
"""

from enum import IntEnum

import numpy as np

from app.core.exceptions import ConfigError


class Stream(IntEnum):
    PERTURB = 1
    LAYER = 2
    DATASET = 3
    QUERY = 4
    SPLIT = 5
    CELL = 6


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"Зерно {seed} вне диапазона [0, 2^64)")
    return seed


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Создает генератор Philox для пары (seed, stream).

    Args:
        seed: Мастер-зерно
        stream: Теги подпотока (тип операции, индекс ячейки и т.п.)

    Returns:
        np.random.Generator
    """
    sequence = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *stream: int) -> int:
    """Производное 64-битное зерно для подпотока"""
    sequence = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
