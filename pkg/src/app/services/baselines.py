"""
Базовые методы: SR и PM для среднего и дисперсии, CFO с биннингом.
"""

from typing import Literal, Union

import numpy as np

from app.core.exceptions import ConfigError, DomainError
from app.core.logging import logger
from app.schemas.baselines import BinningConfig, MomentEstimate
from app.schemas.histogram import BucketSpec, Histogram
from app.schemas.privacy import PmParams, PrivacyParams, SrParams
from app.services.bucketing import bucket_indices
from app.services.frequency_oracles import cfo_aggregate, cfo_perturb_batch, norm_sub
from app.utils.rng import Stream, derive_seed, make_rng

MeanMechanism = Literal["sr", "pm"]


def _check_signed(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size and (np.any(values < -1) or np.any(values > 1) or np.any(np.isnan(values))):
        raise DomainError("Входные значения должны лежать в [-1, 1]")
    return values


def sr_perturb_batch(values, params: SrParams, seed: int) -> np.ndarray:
    """
    Stochastic rounding: +1 с вероятностью q + (p - q)(1 + v)/2, иначе -1.

    Returns:
        np.ndarray: Дебиасированные отчеты v' / (p - q)
    """
    values = _check_signed(values)
    rng = make_rng(seed, Stream.PERTURB)
    positive = rng.random(values.shape[0]) < params.q + (params.p - params.q) * (1 + values) / 2
    return np.where(positive, 1.0, -1.0) / (params.p - params.q)


def sr_perturb(v: float, params: SrParams, seed: int) -> float:
    return float(sr_perturb_batch(np.array([v]), params, seed)[0])


def pm_perturb_batch(values, params: PmParams, seed: int) -> np.ndarray:
    """
    Piecewise mechanism обратной функцией распределения трехкусочной плотности:
    [-s, l(v)) с плотностью low, [l(v), r(v)] с плотностью high, (r(v), s] с плотностью low.
    """
    values = _check_signed(values)
    rng = make_rng(seed, Stream.PERTURB)
    u = rng.random(values.shape[0])
    s, low, high = params.s, params.low_density, params.high_density
    left, right = params.left(values), params.right(values)
    left_mass = low * (left + s)
    middle_mass = high * (right - left)
    report = np.select(
        [u < left_mass, u < left_mass + middle_mass],
        [-s + u / low, left + (u - left_mass) / high],
        right + (u - left_mass - middle_mass) / low,
    )
    return np.clip(report, -s, s)


def pm_perturb(v: float, params: PmParams, seed: int) -> float:
    return float(pm_perturb_batch(np.array([v]), params, seed)[0])


def pm_density(v: float, report, params: PmParams) -> np.ndarray:
    """Плотность PM(v) в точках report"""
    report = np.asarray(report, dtype=np.float64)
    inside = (report >= params.left(v)) & (report <= params.right(v))
    return np.where(inside, params.high_density, params.low_density)


def mean_estimate(reports) -> float:
    """Среднее дебиасированных отчетов"""
    reports = np.asarray(reports, dtype=np.float64)
    if reports.size == 0:
        raise ConfigError("Нет отчетов для оценки среднего")
    return float(reports.mean())


def perturb_mean(values, mechanism: MeanMechanism, params: PrivacyParams, seed: int) -> np.ndarray:
    """Рандомизирует значения из [-1, 1] механизмом SR или PM"""
    if mechanism == "sr":
        return sr_perturb_batch(values, SrParams(epsilon=params.epsilon), seed)
    if mechanism == "pm":
        return pm_perturb_batch(values, PmParams(epsilon=params.epsilon), seed)
    raise ConfigError(f"Неизвестный механизм среднего: {mechanism}")


def estimate_unit_mean(values, mechanism: MeanMechanism, params: PrivacyParams, seed: int) -> float:
    """Среднее значений из [0, 1] через отображение на [-1, 1] и обратно"""
    reports = perturb_mean(2 * np.asarray(values, dtype=np.float64) - 1, mechanism, params, seed)
    return (mean_estimate(reports) + 1) / 2


def variance_protocol(
    values, mechanism: MeanMechanism, params: PrivacyParams, seed: int
) -> MomentEstimate:
    """
    Оценка среднего и дисперсии.

    Случайная половина пользователей (floor(n/2)) оценивает среднее mu~,
    остальные сообщают (v - mu~)^2, отображенное из [0, 1] в [-1, 1].

    Args:
        values: Значения пользователей из [0, 1]
        mechanism: sr или pm
        params: Бюджет приватности
        seed: Зерно

    Returns:
        MomentEstimate
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ConfigError("Для оценки дисперсии нужно не меньше двух пользователей")
    if np.any(values < 0) or np.any(values > 1):
        raise DomainError("Входные значения должны лежать в [0, 1]")
    order = make_rng(seed, Stream.SPLIT).permutation(values.size)
    half = values.size // 2
    first, second = values[order[:half]], values[order[half:]]

    mean = estimate_unit_mean(first, mechanism, params, derive_seed(seed, Stream.PERTURB, 1))
    mean = min(1.0, max(0.0, mean))
    deviations = (second - mean) ** 2
    variance = estimate_unit_mean(deviations, mechanism, params, derive_seed(seed, Stream.PERTURB, 2))
    logger.debug("variance_protocol(%s): mu=%.5f, var=%.5f", mechanism, mean, variance)
    return MomentEstimate(
        mean=mean, variance=variance, mean_users=first.size, variance_users=second.size
    )


def cfo_binning_pipeline(
    values, cfg: BinningConfig, params: Union[PrivacyParams, float], seed: int
) -> Histogram:
    """
    CFO с биннингом: значения огрубляются до c бинов, оценка выбранным
    оракулом, Norm-Sub, масса бина равномерно делится на d/c мелких бакетов.

    Returns:
        Histogram: нормализованная гистограмма над d бакетами
    """
    epsilon = params.epsilon if isinstance(params, PrivacyParams) else float(params)
    bins = bucket_indices(values, BucketSpec(d=cfg.c))
    _, reports = cfo_perturb_batch(bins, cfg.c, epsilon, seed)
    coarse = norm_sub(cfo_aggregate(reports, cfg.c)).values
    fine = np.repeat(coarse / cfg.width, cfg.width)
    return Histogram(values=fine / fine.sum(), normalized=True)
