"""Pydantic схемы базовых методов"""
from pydantic import BaseModel, ConfigDict, Field, model_validator


class BinningConfig(BaseModel):
    """CFO с биннингом: c бинов над d мелкими бакетами"""

    model_config = ConfigDict(frozen=True)

    c: int = Field(..., ge=2, description="Число бинов")
    d: int = Field(..., ge=2, description="Мелкая гранулярность")

    @model_validator(mode="after")
    def check_divides(self) -> "BinningConfig":
        if self.d % self.c:
            raise ValueError(f"Число бинов {self.c} должно делить d={self.d}")
        return self

    @property
    def width(self) -> int:
        return self.d // self.c


class MomentEstimate(BaseModel):
    """Оценка среднего и дисперсии на [0, 1]"""

    mean: float
    variance: float
    mean_users: int
    variance_users: int
