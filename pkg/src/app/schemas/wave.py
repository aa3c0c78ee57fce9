"""Pydantic схемы волновых механизмов и матрицы переходов"""
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.histogram import BucketSpec

WaveKind = Literal["square", "trapezoid", "triangle"]


class WaveShape(BaseModel):
    """
    Волновая функция W(z) = q + (peak - q) T(z), где T - трапеция
    с верхней полушириной ratio * b и нижней b (ratio=1 квадрат, ratio=0 треугольник).
    Вне [-b, b] W(z) = q.
    """

    model_config = ConfigDict(frozen=True)

    kind: WaveKind
    epsilon: float = Field(..., gt=0)
    b: float = Field(..., gt=0, le=1.0, description="Полуширина носителя волны")
    ratio: float = Field(..., ge=0, le=1, description="Отношение верхней стороны к нижней")
    q: float = Field(..., gt=0, description="Нижний уровень плотности")
    peak: float = Field(..., gt=0, description="Верхний уровень плотности")

    @model_validator(mode="after")
    def check_wave(self) -> "WaveShape":
        ceiling = math.exp(self.epsilon) * self.q
        if self.peak < self.q * (1 - 1e-12) or self.peak > ceiling * (1 + 1e-12):
            raise ValueError("Пик волны должен лежать в [q, e^eps q]")
        if abs(self.total_mass - 1.0) > 1e-9:
            raise ValueError("Плотность волны не нормирована")
        return self

    @staticmethod
    def profile_area(b: float, ratio: float) -> float:
        """Площадь трапеции T с нижней полушириной b и верхней ratio * b"""
        return b * (1 + ratio)

    @property
    def excess_area(self) -> float:
        """Площадь T(z) над уровнем q при единичной высоте"""
        return self.profile_area(self.b, self.ratio)

    @property
    def excess_mass(self) -> float:
        return (self.peak - self.q) * self.excess_area

    @property
    def total_mass(self) -> float:
        return self.q * (1 + 2 * self.b) + self.excess_mass

    @property
    def lo(self) -> float:
        return -self.b

    @property
    def hi(self) -> float:
        return 1.0 + self.b

    def profile(self, z) -> np.ndarray:
        """T(z) в [0, 1]"""
        z = np.abs(np.asarray(z, dtype=np.float64))
        top = self.ratio * self.b
        if self.b == top:
            return (z <= self.b).astype(np.float64)
        return np.clip((self.b - z) / (self.b - top), 0.0, 1.0)

    def density(self, z) -> np.ndarray:
        """W(z)"""
        return self.q + (self.peak - self.q) * self.profile(z)


class TransitionMatrix(BaseModel):
    """Матрица M[j][i]: вероятность отчета в выходном бакете j при входе в бакете i"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    input_spec: Optional[BucketSpec] = None
    output_spec: Optional[BucketSpec] = None

    @model_validator(mode="after")
    def check_stochastic(self) -> "TransitionMatrix":
        if self.matrix.ndim != 2:
            raise ValueError("Матрица переходов должна быть двумерной")
        if np.any(self.matrix < 0):
            raise ValueError("Матрица переходов содержит отрицательные элементы")
        if np.any(np.abs(self.matrix.sum(axis=0) - 1.0) > 1e-9):
            raise ValueError("Столбцы матрицы переходов должны суммироваться в 1")
        self.matrix.setflags(write=False)
        return self

    @property
    def d(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def d_out(self) -> int:
        return int(self.matrix.shape[0])
