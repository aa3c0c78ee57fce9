"""Pydantic схемы EM реконструкции"""
import math
from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field

from app.core.settings import config
from app.schemas.histogram import Histogram


class EmConfig(BaseModel):
    """Параметры EM / EMS"""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(..., gt=0, description="Порог изменения log-likelihood")
    max_iters: int = Field(default_factory=lambda: config.em_cfg.MAX_ITERS, ge=1)
    smoothing: bool = Field(False, description="EMS: сглаживание (1/4, 1/2, 1/4) на каждой итерации")
    init: Literal["uniform"] = Field("uniform", description="Начальное приближение")

    @classmethod
    def for_epsilon(cls, epsilon: float, smoothing: bool) -> "EmConfig":
        """tau = 1e-3 e^eps для EM и 1e-3 для EMS"""
        tau = config.em_cfg.TAU_SMOOTHED if smoothing else config.em_cfg.TAU_FACTOR * math.exp(epsilon)
        return cls(tau=tau, smoothing=smoothing)


class ReconstructionResult(BaseModel):
    """Результат реконструкции с диагностикой"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    histogram: Histogram
    iterations: int
    log_likelihood: float
    converged: bool
    trace: List[float] = Field(default_factory=list, description="log-likelihood по итерациям")
