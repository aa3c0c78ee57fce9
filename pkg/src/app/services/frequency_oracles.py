"""
Категориальные частотные оракулы: GRR, OLH, HRR и пост-обработка Norm-Sub.
"""

import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import hadamard

from app.core.exceptions import ConfigError, DomainError, NumericalDegeneracyError
from app.core.logging import logger
from app.core.settings import config
from app.schemas.histogram import Histogram, Mechanism, ReportBatch
from app.schemas.privacy import GrrParams, HrrParams, OlhParams, PrivacyParams
from app.utils.hashing import hash_mod
from app.utils.rng import Stream, make_rng


class CfoKind(str, Enum):
    GRR = "grr"
    OLH = "olh"


def _check_indices(values: np.ndarray, d: int) -> np.ndarray:
    values = np.asarray(values)
    if values.size and (values.min() < 0 or values.max() >= d):
        raise DomainError(f"Индекс вне домена [0, {d})")
    return values.astype(np.int64)


def _require_users(reports: ReportBatch) -> int:
    if reports.n == 0:
        raise ConfigError("Нет отчетов для агрегации")
    return reports.n


def _grr_sample(values: np.ndarray, d: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """GRR над [0, d): с вероятностью p истинное значение, иначе сдвиг на 1..d-1"""
    n = values.shape[0]
    keep = rng.random(n) < p
    shift = rng.integers(1, d, size=n) if d > 1 else np.zeros(n, dtype=np.int64)
    return np.where(keep, values, (values + shift) % d)


# --- GRR ---


def grr_perturb_batch(values, params: GrrParams, seed: int) -> ReportBatch:
    """
    GRR отчеты для всех пользователей.

    Args:
        values: Индексы значений пользователей в [0, d)
        params: Параметры GRR
        seed: Зерно

    Returns:
        ReportBatch
    """
    values = _check_indices(values, params.d)
    rng = make_rng(seed, Stream.PERTURB)
    reports = _grr_sample(values, params.d, params.p, rng)
    return ReportBatch(
        mechanism=Mechanism.GRR, epsilon=params.epsilon, domain_size=params.d, values=reports
    )


def grr_perturb(v: int, params: GrrParams, seed: int) -> int:
    """GRR отчет одного пользователя"""
    return int(grr_perturb_batch(np.array([v]), params, seed).values[0])


def grr_aggregate(reports: ReportBatch, params: GrrParams) -> Histogram:
    """
    Несмещенная оценка частот x_v = (C(v)/n - q) / (p - q).

    Returns:
        Histogram: ненормализованные частоты (могут быть отрицательными)
    """
    n = _require_users(reports)
    counts = np.bincount(_check_indices(reports.values, params.d), minlength=params.d)
    estimate = (counts / n - params.q) / (params.p - params.q)
    return Histogram(values=estimate)


def grr_variance(params: GrrParams, n: int) -> float:
    """Дисперсия оценки GRR: (d - 2 + e^eps) / ((e^eps - 1)^2 n)"""
    return (params.d - 2 + params.exp_eps) / ((params.exp_eps - 1) ** 2 * n)


# --- OLH ---


def olh_perturb_batch(values, params: OlhParams, seed: int, d: Optional[int] = None) -> ReportBatch:
    """
    OLH отчеты: у каждого пользователя свежий ключ хэш-функции,
    хэш значения рандомизируется GRR над [0, g).
    """
    values = np.asarray(values, dtype=np.int64)
    if values.size and values.min() < 0:
        raise DomainError("Индекс значения не может быть отрицательным")
    if d is not None:
        values = _check_indices(values, d)
    rng = make_rng(seed, Stream.PERTURB)
    keys = rng.integers(0, np.iinfo(np.uint64).max, size=values.shape[0], dtype=np.uint64, endpoint=True)
    hashed = hash_mod(values, keys, params.g)
    reports = _grr_sample(hashed, params.g, params.p, rng)
    return ReportBatch(
        mechanism=Mechanism.OLH, epsilon=params.epsilon, domain_size=d, values=reports, keys=keys
    )


def olh_perturb(v: int, params: OlhParams, seed: int) -> Tuple[int, int]:
    """OLH отчет одного пользователя: (ключ хэша, рандомизированное значение хэша)"""
    batch = olh_perturb_batch(np.array([v]), params, seed)
    return int(batch.keys[0]), int(batch.values[0])


def olh_support(reports: ReportBatch, g: int, d: int, chunk: Optional[int] = None) -> np.ndarray:
    """
    C(v) = |{j : H_j(v) = y_j}| для всех v из [0, d).

    Пользователи обрабатываются блоками, чтобы матрица хэшей умещалась в памяти.
    """
    if reports.keys is None:
        raise ConfigError("OLH отчеты должны содержать ключи хэш-функций")
    chunk = chunk or config.harness_cfg.OLH_CHUNK
    domain = np.arange(d, dtype=np.uint64)[None, :]
    support = np.zeros(d, dtype=np.int64)
    for start in range(0, reports.n, chunk):
        keys = reports.keys[start:start + chunk, None]
        values = np.asarray(reports.values[start:start + chunk, None], dtype=np.int64)
        support += np.count_nonzero(hash_mod(domain, keys, g) == values, axis=0)
    return support


def olh_aggregate(reports: ReportBatch, params: OlhParams, d: int) -> Histogram:
    """
    Несмещенная оценка частот OLH: x_v = (C(v)/n - 1/g) / (p - 1/g).

    Returns:
        Histogram: ненормализованные частоты
    """
    n = _require_users(reports)
    support = olh_support(reports, params.g, d)
    estimate = (support / n - 1.0 / params.g) / (params.p - 1.0 / params.g)
    return Histogram(values=estimate)


def olh_variance(epsilon: float, n: int) -> float:
    """Приближенная дисперсия OLH: 4 e^eps / ((e^eps - 1)^2 n)"""
    exp_eps = math.exp(epsilon)
    return 4 * exp_eps / ((exp_eps - 1) ** 2 * n)


def choose_cfo(d: int, params: PrivacyParams) -> CfoKind:
    """GRR при d - 2 < 3e^eps, иначе OLH"""
    if d < 2:
        raise ConfigError("Размер домена для частотного оракула должен быть не меньше 2")
    return CfoKind.GRR if d - 2 < 3 * params.exp_eps else CfoKind.OLH


# --- HRR ---


def hadamard_entry(row, col) -> np.ndarray:
    """Элемент матрицы Сильвестра: (-1)^popcount(row & col)"""
    bits = np.bitwise_count(np.asarray(row, dtype=np.uint64) & np.asarray(col, dtype=np.uint64))
    return 1 - 2 * (bits.astype(np.int64) & 1)


def hrr_perturb_batch(values, params: HrrParams, seed: int) -> ReportBatch:
    """
    HRR отчеты: случайная строка матрицы Адамара и знак phi[row][v],
    сохраненный с вероятностью e^eps / (e^eps + 1).
    """
    values = _check_indices(values, params.order)
    rng = make_rng(seed, Stream.PERTURB)
    n = values.shape[0]
    rows = rng.integers(0, params.order, size=n)
    flip = rng.random(n) >= params.p
    signs = hadamard_entry(rows, values) * np.where(flip, -1, 1)
    return ReportBatch(
        mechanism=Mechanism.HRR, epsilon=params.epsilon, domain_size=params.d, values=signs, rows=rows
    )


def hrr_perturb(v: int, params: HrrParams, seed: int) -> Tuple[int, int]:
    """HRR отчет одного пользователя: (строка, знак)"""
    batch = hrr_perturb_batch(np.array([v]), params, seed)
    return int(batch.rows[0]), int(batch.values[0])


def hrr_coefficients(reports: ReportBatch, params: HrrParams, n: Optional[int] = None) -> np.ndarray:
    """
    Несмещенные оценки коэффициентов Адамара c_r = sum_v x_v phi[r][v].

    Args:
        reports: HRR отчеты
        params: Параметры HRR
        n: Число пользователей для масштабирования (по умолчанию reports.n)
    """
    n = n or _require_users(reports)
    sums = np.bincount(
        np.asarray(reports.rows, dtype=np.int64),
        weights=np.asarray(reports.values, dtype=np.float64),
        minlength=params.order,
    )
    return params.order * sums / (n * (2 * params.p - 1))


def hrr_aggregate(reports: ReportBatch, params: HrrParams, d: Optional[int] = None) -> Histogram:
    """
    Частоты по коэффициентам Адамара: f = H c / order.

    Returns:
        Histogram: ненормализованные частоты над первыми d значениями
    """
    coefficients = hrr_coefficients(reports, params)
    frequencies = hadamard(params.order) @ coefficients / params.order
    return Histogram(values=frequencies[: d or params.d])


# --- диспетчеризация ---


def cfo_perturb_batch(values, d: int, epsilon: float, seed: int) -> Tuple[CfoKind, ReportBatch]:
    """Рандомизирует индексы оракулом, выбранным choose_cfo"""
    kind = choose_cfo(d, PrivacyParams(epsilon=epsilon))
    if kind is CfoKind.GRR:
        return kind, grr_perturb_batch(values, GrrParams(epsilon=epsilon, d=d), seed)
    return kind, olh_perturb_batch(values, OlhParams.optimal(epsilon), seed, d=d)


def cfo_aggregate(reports: ReportBatch, d: int) -> Histogram:
    """Агрегирует отчеты GRR или OLH по тегу механизма"""
    if reports.mechanism is Mechanism.GRR:
        return grr_aggregate(reports, GrrParams(epsilon=reports.epsilon, d=d))
    if reports.mechanism is Mechanism.OLH:
        return olh_aggregate(reports, OlhParams.optimal(reports.epsilon), d)
    raise ConfigError(f"Механизм {reports.mechanism.value} не является частотным оракулом")


# --- Norm-Sub ---


def norm_sub(estimate: Histogram) -> Histogram:
    """
    Проецирует оценку частот на симплекс.

    Отрицательные значения зануляются, из положительных вычитается
    общая константа так, чтобы сумма стала 1. Повторяется, пока
    ни одно значение не меняет знак (не более d раундов).

    Raises:
        NumericalDegeneracyError: если нет ни одного положительного значения
    """
    x = estimate.as_float().copy()
    if not np.any(x > 0):
        raise NumericalDegeneracyError("Norm-Sub требует хотя бы одно положительное значение")
    for _ in range(x.size + 1):
        positive = x > 0
        x[~positive] = 0.0
        x[positive] -= (x.sum() - 1.0) / np.count_nonzero(positive)
        if np.all(x[positive] >= 0):
            break
    else:
        logger.warning("Norm-Sub не сошелся за %s раундов", x.size + 1)
    x = np.clip(x, 0.0, None)
    return Histogram(values=x / x.sum(), normalized=True)
