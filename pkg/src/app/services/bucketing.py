"""Бакетизация значений и нормализация гистограмм"""
import numpy as np

from app.core.exceptions import DomainError, NumericalDegeneracyError
from app.schemas.histogram import BucketSpec, Histogram, ReportHistogram


def bucket_of(v: float, spec: BucketSpec) -> int:
    """
    Индекс бакета для значения v.

    Правая граница domain_hi относится к последнему бакету.

    Args:
        v: Значение из [domain_lo, domain_hi]
        spec: Разбиение домена

    Returns:
        int: Индекс в [0, d)
    """
    return int(bucket_indices(np.array([v], dtype=np.float64), spec)[0])


def bucket_indices(values, spec: BucketSpec, tolerance: float = 0.0) -> np.ndarray:
    """
    Векторизованная версия bucket_of.

    Args:
        values: Массив значений
        spec: Разбиение домена
        tolerance: Допуск на выход за границы из-за округления

    Returns:
        np.ndarray[int64]
    """
    values = np.asarray(values, dtype=np.float64)
    outside = (values < spec.domain_lo - tolerance) | (values > spec.domain_hi + tolerance)
    if np.any(outside) or np.any(np.isnan(values)):
        bad = values[outside | np.isnan(values)][0]
        raise DomainError(
            f"Значение {bad} вне домена [{spec.domain_lo}, {spec.domain_hi}]"
        )
    index = np.floor((values - spec.domain_lo) / spec.width).astype(np.int64)
    return np.clip(index, 0, spec.d - 1)


def histogram_counts(values, spec: BucketSpec, tolerance: float = 0.0) -> np.ndarray:
    """Целые счетчики значений по бакетам"""
    return np.bincount(bucket_indices(values, spec, tolerance), minlength=spec.d)


def report_histogram(reports, spec: BucketSpec) -> ReportHistogram:
    """Гистограмма непрерывных отчетов по выходным бакетам"""
    return ReportHistogram(counts=histogram_counts(reports, spec, tolerance=1e-9))


def true_histogram(values, d: int) -> Histogram:
    """Нормализованная гистограмма значений из [0, 1]"""
    return normalize(Histogram(values=histogram_counts(values, BucketSpec(d=d))))


def normalize(h: Histogram) -> Histogram:
    """
    Делит значения на их сумму.

    Raises:
        NumericalDegeneracyError: если сумма не положительна
    """
    values = h.as_float()
    total = values.sum()
    if not total > 0:
        raise NumericalDegeneracyError("Нельзя нормализовать гистограмму с нулевой суммой")
    return Histogram(values=values / total, normalized=True)
