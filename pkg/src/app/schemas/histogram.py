"""Pydantic схемы гистограмм, бакетов и пакетов отчетов"""
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import ConfigError


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class BucketSpec(BaseModel):
    """Равномерное разбиение отрезка [domain_lo, domain_hi] на d бакетов"""

    model_config = ConfigDict(frozen=True)

    domain_lo: float = Field(0.0, description="Левая граница")
    domain_hi: float = Field(1.0, description="Правая граница")
    d: int = Field(..., ge=1, description="Число бакетов")

    @model_validator(mode="after")
    def check_bounds(self) -> "BucketSpec":
        if not self.domain_lo < self.domain_hi:
            raise ValueError("domain_lo должен быть меньше domain_hi")
        return self

    @property
    def width(self) -> float:
        return (self.domain_hi - self.domain_lo) / self.d

    def edges(self) -> np.ndarray:
        return np.linspace(self.domain_lo, self.domain_hi, self.d + 1)

    def midpoints(self) -> np.ndarray:
        return self.domain_lo + (np.arange(self.d) + 0.5) * self.width


class Histogram(BaseModel):
    """
    Гистограмма над d упорядоченными бакетами.

    Счетчики хранятся целыми до нормализации, частоты в float64.
    Нормализованная гистограмма лежит на симплексе.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(..., description="Счетчики или частоты, длина d")
    normalized: bool = Field(False, description="Лежит ли вектор на симплексе")

    @model_validator(mode="before")
    @classmethod
    def freeze_values(cls, data):
        if isinstance(data, dict) and "values" in data:
            raw = np.asarray(data["values"])
            dtype = np.int64 if np.issubdtype(raw.dtype, np.integer) else np.float64
            data = {**data, "values": _frozen_array(raw, dtype)}
        return data

    @model_validator(mode="after")
    def check_shape(self) -> "Histogram":
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("Гистограмма должна быть одномерной и непустой")
        if self.normalized:
            if np.any(self.values < 0):
                raise ValueError("Нормализованная гистограмма содержит отрицательные значения")
            if abs(float(self.values.sum()) - 1.0) > 1e-9:
                raise ValueError("Нормализованная гистограмма должна суммироваться в 1")
        return self

    @property
    def d(self) -> int:
        return int(self.values.size)

    def as_float(self) -> np.ndarray:
        return self.values.astype(np.float64)


class ReportHistogram(BaseModel):
    """Число отчетов n_j в каждом выходном бакете"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    counts: np.ndarray = Field(..., description="Целые счетчики по выходным бакетам")

    @model_validator(mode="before")
    @classmethod
    def freeze_counts(cls, data):
        if isinstance(data, dict) and "counts" in data:
            counts = np.asarray(data["counts"])
            if counts.ndim != 1 or np.any(counts < 0):
                raise ValueError("Счетчики должны быть одномерным неотрицательным вектором")
            if not np.all(np.equal(np.mod(counts, 1), 0)):
                raise ValueError("Счетчики должны быть целыми")
            data = {**data, "counts": _frozen_array(counts, np.int64)}
        return data

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def d_out(self) -> int:
        return int(self.counts.size)


class Mechanism(str, Enum):
    GRR = "grr"
    OLH = "olh"
    HRR = "hrr"
    SW = "sw"
    SW_DISCRETE = "sw-discrete"
    GW = "gw"
    SR = "sr"
    PM = "pm"
    HH = "hh"
    HAAR = "haar"


class ReportBatch(BaseModel):
    """
    Пакет рандомизированных отчетов пользователей.

    values - отчет (значение, хэш-значение или знак HRR),
    keys - ключи хэш-функций OLH, rows - строки матрицы Адамара,
    layers - слой дерева для иерархических механизмов.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mechanism: Mechanism
    epsilon: float = Field(..., gt=0)
    domain_size: Optional[int] = Field(None, description="Размер категориального домена")
    b: Optional[float] = Field(None, ge=0, description="Полуширина волны SW")
    values: np.ndarray
    keys: Optional[np.ndarray] = None
    rows: Optional[np.ndarray] = None
    layers: Optional[np.ndarray] = None

    @model_validator(mode="before")
    @classmethod
    def freeze_arrays(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            for name in ("values", "keys", "rows", "layers"):
                if data.get(name) is not None:
                    raw = np.asarray(data[name])
                    data[name] = _frozen_array(raw, raw.dtype)
        return data

    @model_validator(mode="after")
    def check_lengths(self) -> "ReportBatch":
        for name in ("keys", "rows", "layers"):
            array = getattr(self, name)
            if array is not None and array.shape[0] != self.values.shape[0]:
                raise ValueError(f"Длина {name} не совпадает с числом отчетов")
        return self

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def select(self, mask: np.ndarray) -> "ReportBatch":
        """Подмножество отчетов по булевой маске"""
        return self.model_copy(
            update={
                name: getattr(self, name)[mask]
                for name in ("values", "keys", "rows", "layers")
                if getattr(self, name) is not None
            }
        )


def require_same_length(x: Histogram, y: Histogram) -> None:
    if x.d != y.d:
        raise ConfigError(f"Гистограммы разной длины: {x.d} и {y.d}")
