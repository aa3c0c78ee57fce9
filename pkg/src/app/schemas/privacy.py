"""Pydantic схемы параметров приватности и механизмов"""
import math
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, computed_field

RngSeed = Annotated[int, Field(ge=0, lt=2**64, description="64-битное беззнаковое зерно")]


class PrivacyParams(BaseModel):
    """Бюджет приватности eps и кэшированное e^eps"""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(..., gt=0, allow_inf_nan=False, description="Бюджет приватности")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def exp_eps(self) -> float:
        return math.exp(self.epsilon)


class GrrParams(PrivacyParams):
    """Параметры обобщенного randomized response над доменом размера d"""

    d: int = Field(..., ge=2, description="Размер домена")

    @property
    def p(self) -> float:
        return self.exp_eps / (self.exp_eps + self.d - 1)

    @property
    def q(self) -> float:
        return 1.0 / (self.exp_eps + self.d - 1)


class OlhParams(PrivacyParams):
    """Параметры optimized local hashing"""

    g: int = Field(..., ge=2, description="Размер области значений хэша")

    @classmethod
    def optimal(cls, epsilon: float) -> "OlhParams":
        return cls(epsilon=epsilon, g=max(2, round(math.exp(epsilon) + 1)))

    @property
    def p(self) -> float:
        return self.exp_eps / (self.exp_eps + self.g - 1)

    @property
    def q(self) -> float:
        return 1.0 / (self.exp_eps + self.g - 1)


class HrrParams(PrivacyParams):
    """Параметры Hadamard randomized response"""

    d: int = Field(..., ge=1, description="Размер домена")

    @property
    def order(self) -> int:
        """Наименьшая степень двойки, не меньшая d"""
        return 1 << max(0, (self.d - 1).bit_length())

    @property
    def p(self) -> float:
        return self.exp_eps / (self.exp_eps + 1)


class SwParams(PrivacyParams):
    """
    Параметры Square Wave: плато полуширины b с плотностью p,
    остальная часть [-b, 1+b] с плотностью q.
    """

    b: float = Field(..., ge=0, le=0.5, description="Полуширина плато")

    @property
    def p(self) -> float:
        return self.exp_eps / (2 * self.b * self.exp_eps + 1)

    @property
    def q(self) -> float:
        return 1.0 / (2 * self.b * self.exp_eps + 1)

    @property
    def lo(self) -> float:
        return -self.b

    @property
    def hi(self) -> float:
        return 1.0 + self.b


class DiscreteSwParams(PrivacyParams):
    """Дискретный Square Wave: вход [0, d), выход [0, d + 2b)"""

    d: int = Field(..., ge=1, description="Размер входного домена")
    b: int = Field(..., ge=0, description="Целочисленная полуширина")

    @property
    def d_out(self) -> int:
        return self.d + 2 * self.b

    @property
    def p(self) -> float:
        return self.exp_eps / ((2 * self.b + 1) * self.exp_eps + self.d - 1)

    @property
    def q(self) -> float:
        return 1.0 / ((2 * self.b + 1) * self.exp_eps + self.d - 1)


class SrParams(PrivacyParams):
    """Stochastic rounding для оценки среднего на [-1, 1]"""

    @property
    def p(self) -> float:
        return self.exp_eps / (self.exp_eps + 1)

    @property
    def q(self) -> float:
        return 1.0 / (self.exp_eps + 1)


class PmParams(PrivacyParams):
    """Piecewise mechanism: выход на [-s, s], высокая плотность на [l(v), r(v)]"""

    @property
    def _half(self) -> float:
        return math.exp(self.epsilon / 2)

    @property
    def s(self) -> float:
        return (self._half + 1) / (self._half - 1)

    def left(self, v):
        return (self._half * v - 1) / (self._half - 1)

    def right(self, v):
        return (self._half * v + 1) / (self._half - 1)

    @property
    def width(self) -> float:
        return 2.0 / (self._half - 1)

    @property
    def high_density(self) -> float:
        return self._half / 2 * (self._half - 1) / (self._half + 1)

    @property
    def low_density(self) -> float:
        return self.high_density / self.exp_eps

    @property
    def high_mass(self) -> float:
        return self._half / (self._half + 1)
