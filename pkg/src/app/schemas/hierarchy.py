"""Pydantic схемы иерархических оценщиков"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.settings import config
from app.schemas.histogram import Histogram


class TreeShape(BaseModel):
    """
    Форма beta-арного дерева над d листьями.

    Листья дополняются нулевыми бакетами до beta^h. Слой 1 - листья,
    слой h + 1 - корень.
    """

    model_config = ConfigDict(frozen=True)

    d: int = Field(..., ge=2, description="Число листьев до дополнения")
    beta: int = Field(default_factory=lambda: config.harness_cfg.BETA, ge=2, description="Ветвление")

    @property
    def height(self) -> int:
        height, size = 1, self.beta
        while size < self.d:
            height += 1
            size *= self.beta
        return height

    @property
    def leaves(self) -> int:
        return self.beta**self.height

    def layer_size(self, layer: int) -> int:
        """Число узлов в слое layer (1 = листья, height + 1 = корень)"""
        return self.leaves // self.beta ** (layer - 1)

    @property
    def node_count(self) -> int:
        return sum(self.layer_size(layer) for layer in range(1, self.height + 2))

    def offsets(self) -> List[int]:
        """Смещение слоя в векторе узлов (корень первым, далее сверху вниз), по индексу layer - 1"""
        offsets = [0] * (self.height + 1)
        position = 0
        for layer in range(self.height + 1, 0, -1):
            offsets[layer - 1] = position
            position += self.layer_size(layer)
        return offsets


class HierarchyTree(BaseModel):
    """Оценки частот по слоям дерева и число пользователей каждого слоя"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    shape: TreeShape
    layers: List[np.ndarray] = Field(..., description="Оценки по слоям, индекс layer - 1")
    user_counts: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_layers(self) -> "HierarchyTree":
        if len(self.layers) != self.shape.height + 1:
            raise ValueError("Число слоев не совпадает с высотой дерева")
        for layer, values in enumerate(self.layers, start=1):
            if values.shape != (self.shape.layer_size(layer),):
                raise ValueError(f"Слой {layer} имеет неверный размер")
        return self

    def to_vector(self) -> np.ndarray:
        """Вектор узлов: корень, затем слои сверху вниз"""
        return np.concatenate([self.layers[layer - 1] for layer in range(self.shape.height + 1, 0, -1)])

    @classmethod
    def from_vector(cls, shape: TreeShape, vector: np.ndarray, user_counts=None) -> "HierarchyTree":
        offsets = shape.offsets()
        layers = [
            np.array(vector[offsets[layer - 1]:offsets[layer - 1] + shape.layer_size(layer)], dtype=np.float64)
            for layer in range(1, shape.height + 2)
        ]
        return cls(shape=shape, layers=layers, user_counts=list(user_counts or []))

    @property
    def leaf_values(self) -> np.ndarray:
        return self.layers[0][: self.shape.d]


class AdmmOptions(BaseModel):
    """Параметры HH-ADMM"""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(default_factory=lambda: config.admm_cfg.RHO, gt=0)
    tol: float = Field(default_factory=lambda: config.admm_cfg.TOL, gt=0)
    max_iters: int = Field(default_factory=lambda: config.admm_cfg.MAX_ITERS, ge=1)


class AdmmState(BaseModel):
    """Прямые и масштабированные двойственные переменные ADMM"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    rho: float = 1.0

    @classmethod
    def start(cls, noisy: np.ndarray, rho: float) -> "AdmmState":
        zeros = np.zeros_like(noisy)
        return cls(
            x=noisy.copy(), y=zeros.copy(), z=zeros.copy(), w=zeros.copy(),
            mu=zeros.copy(), nu=zeros.copy(), eta=zeros.copy(), rho=rho,
        )


class AdmmResult(BaseModel):
    """Результат HH-ADMM: листья и диагностика"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    histogram: Histogram
    nodes: np.ndarray = Field(..., description="Итоговый вектор узлов (корень первым)")
    iterations: int
    converged: bool
    residual: float
    constraint_residual: Optional[float] = Field(None, description="max |A w|, если передана A")
    objective: List[float] = Field(default_factory=list)


class HaarTree(BaseModel):
    """Бинарное дерево коэффициентов Хаара: корневая масса и коэффициенты по слоям"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    total: float = 1.0
    coefficients: List[np.ndarray] = Field(..., description="Коэффициенты слоя layer, индекс layer - 1")

    @property
    def height(self) -> int:
        return len(self.coefficients)

    @property
    def d(self) -> int:
        return 2**self.height
