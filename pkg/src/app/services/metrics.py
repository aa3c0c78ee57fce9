"""
Метрики качества оценки распределения над d бакетами на [0, 1].
"""

from typing import Callable, Optional, Sequence

import numpy as np

from app.core.exceptions import ConfigError
from app.core.settings import config
from app.schemas.histogram import BucketSpec, Histogram, require_same_length
from app.utils.rng import Stream, make_rng

QUANTILE_LEVELS = tuple(round(0.1 * k, 1) for k in range(1, 10))
# допуск сравнения CDF с уровнем квантиля
_CDF_TOLERANCE = 1e-9

RangeAnswer = Callable[[int, int], float]


def cdf(x: Histogram) -> np.ndarray:
    """P(x, v) = sum_{i <= v} x_i"""
    return np.cumsum(x.as_float())


def wasserstein(x: Histogram, x_hat: Histogram) -> float:
    """W1 в единицах домена: sum |P(x) - P(x^)| * ширина бакета"""
    require_same_length(x, x_hat)
    return float(np.abs(cdf(x) - cdf(x_hat)).sum() / x.d)


def ks_distance(x: Histogram, x_hat: Histogram) -> float:
    """max |P(x) - P(x^)|"""
    require_same_length(x, x_hat)
    return float(np.abs(cdf(x) - cdf(x_hat)).max())


def range_bounds(start: float, alpha: float, d: int):
    """Границы бакетов [lo, hi) для запроса [start, start + alpha]"""
    lo = int(round(start * d))
    hi = min(lo + int(round(alpha * d)), d)
    return lo, hi


def prefix_answer(x: Histogram) -> RangeAnswer:
    """Ответ на запрос диапазона суммой бакетов"""
    prefix = np.concatenate([[0.0], cdf(x)])
    return lambda lo, hi: float(prefix[hi] - prefix[lo])


def range_query_errors(
    x: Histogram,
    answer: RangeAnswer,
    alpha: float,
    trials: Optional[int] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    Абсолютные ошибки запросов диапазона.

    При trials=None перебираются все выровненные по бакетам начала.
    """
    if not 0 < alpha < 1:
        raise ConfigError("alpha должен лежать в (0, 1)")
    truth = prefix_answer(x)
    if trials is None:
        width = int(round(alpha * x.d))
        bounds = [(lo, min(lo + width, x.d)) for lo in range(0, x.d - width + 1)]
    else:
        starts = make_rng(seed, Stream.QUERY).uniform(0.0, 1.0 - alpha, size=trials)
        bounds = [range_bounds(start, alpha, x.d) for start in starts]
    return np.array([abs(truth(lo, hi) - answer(lo, hi)) for lo, hi in bounds])


def range_query_mae(
    x: Histogram,
    x_hat: Histogram,
    alpha: float,
    trials: Optional[int] = None,
    seed: int = 0,
    exhaustive: bool = False,
) -> float:
    """
    Средняя абсолютная ошибка запросов диапазона ширины alpha.

    Args:
        x: Истинная гистограмма
        x_hat: Оценка (может быть ненормализованной, как у HaarHRR)
        alpha: Ширина диапазона
        trials: Число случайных запросов (по умолчанию из настроек)
        seed: Зерно выбора начал
        exhaustive: Перебрать все выровненные начала вместо случайных
    """
    require_same_length(x, x_hat)
    if not exhaustive:
        trials = trials or config.harness_cfg.RANGE_TRIALS
    errors = range_query_errors(x, prefix_answer(x_hat), alpha, None if exhaustive else trials, seed)
    return float(errors.mean())


def mean_of(x: Histogram) -> float:
    """Среднее распределения с массами в серединах бакетов"""
    return float(np.dot(x.as_float(), BucketSpec(d=x.d).midpoints()))


def variance_of(x: Histogram) -> float:
    midpoints = BucketSpec(d=x.d).midpoints()
    mean = mean_of(x)
    return float(np.dot(x.as_float(), (midpoints - mean) ** 2))


def quantile(x: Histogram, level: float) -> float:
    """
    Середина наибольшего бакета с CDF <= level; если такого нет, бакет 0.
    """
    index = int(np.searchsorted(cdf(x), level + _CDF_TOLERANCE, side="right")) - 1
    return float(BucketSpec(d=x.d).midpoints()[max(index, 0)])


def quantiles_mae(x: Histogram, x_hat: Histogram, levels: Sequence[float] = QUANTILE_LEVELS) -> float:
    """Средняя ошибка квантилей 10%..90% в единицах домена"""
    require_same_length(x, x_hat)
    return float(np.mean([abs(quantile(x, level) - quantile(x_hat, level)) for level in levels]))
