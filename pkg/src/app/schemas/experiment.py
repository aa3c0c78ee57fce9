"""Pydantic схемы наборов данных, методов и экспериментов"""
import hashlib
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator, model_validator

from app.core.settings import config
from app.schemas.histogram import Histogram
from app.schemas.wave import WaveKind

PRESET_RANGES: Dict[str, Tuple[float, float]] = {
    "taxi": (0.0, 86_400.0),  # секунда в сутках
    "income": (0.0, float(2**19)),
    "retirement": (0.0, 60_000.0),
}


class DatasetSpec(BaseModel):
    """Источник данных и правило предобработки в [0, 1]"""

    model_config = ConfigDict(frozen=True)

    name: str = Field("beta", description="Имя набора в результатах")
    source: Literal["beta", "csv"] = Field("beta", description="Синтетика Beta(a, b) или CSV")
    a: float = Field(5.0, gt=0)
    b: float = Field(2.0, gt=0)
    n: int = Field(100_000, ge=1, description="Размер синтетической выборки")
    path: Optional[Path] = None
    preset: Literal["none", "taxi", "income", "retirement"] = "none"
    filter_lo: Optional[float] = Field(None, description="Левая граница фильтра (включительно)")
    filter_hi: Optional[float] = Field(None, description="Правая граница фильтра (не включительно)")
    buckets: Optional[int] = Field(None, ge=2, description="Число бакетов гистограммы")
    subsample: bool = Field(False, description="Ограничить число пользователей max_users")
    max_users: int = Field(default_factory=lambda: config.harness_cfg.MAX_USERS, ge=1)

    @model_validator(mode="after")
    def check_source(self) -> "DatasetSpec":
        if self.source == "csv" and self.path is None:
            raise ValueError("Для CSV набора нужен path")
        if (self.filter_lo is None) != (self.filter_hi is None):
            raise ValueError("filter_lo и filter_hi задаются вместе")
        if self.filter_lo is not None and not self.filter_lo < self.filter_hi:
            raise ValueError("filter_lo должен быть меньше filter_hi")
        return self

    @property
    def filter_range(self) -> Optional[Tuple[float, float]]:
        if self.filter_lo is not None:
            return self.filter_lo, self.filter_hi
        return PRESET_RANGES.get(self.preset)

    @property
    def bucket_count(self) -> int:
        if self.buckets:
            return self.buckets
        return 256 if self.source == "beta" else 1024


class MethodKind(str, Enum):
    SW_EMS = "sw-ems"
    SW_EM = "sw-em"
    SW_BR_EMS = "sw-br-ems"
    GW_EMS = "gw-ems"
    CFO_BINNING = "cfo-binning"
    HH = "hh"
    HAAR = "haar"
    HH_ADMM = "hh-admm"
    SR = "sr"
    PM = "pm"


DISTRIBUTION_METRICS = ("w1", "ks", "range", "mean", "var", "quantiles")

# Допустимые пары метод / метрика
VALID_METRICS: Dict[MethodKind, Tuple[str, ...]] = {
    MethodKind.SW_EMS: DISTRIBUTION_METRICS,
    MethodKind.SW_EM: DISTRIBUTION_METRICS,
    MethodKind.SW_BR_EMS: DISTRIBUTION_METRICS,
    MethodKind.GW_EMS: DISTRIBUTION_METRICS,
    MethodKind.CFO_BINNING: DISTRIBUTION_METRICS,
    MethodKind.HH_ADMM: DISTRIBUTION_METRICS,
    MethodKind.HH: ("range",),
    MethodKind.HAAR: ("range",),
    MethodKind.SR: ("mean", "var"),
    MethodKind.PM: ("mean", "var"),
}


def metric_family(metric: str) -> str:
    return metric.split(":", 1)[0]


def range_alpha(metric: str) -> float:
    """Ширина диапазона из имени метрики range:alpha"""
    try:
        alpha = float(metric.split(":", 1)[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"Метрика диапазона должна иметь вид range:alpha, получено {metric!r}") from exc
    if not 0 < alpha < 1:
        raise ValueError("alpha должен лежать в (0, 1)")
    return alpha


class MethodSpec(BaseModel):
    """Метод оценки с параметрами варианта"""

    model_config = ConfigDict(frozen=True)

    kind: MethodKind
    bins: Optional[int] = Field(None, ge=2, description="Число бинов для cfo-binning")
    shape: Optional[WaveKind] = Field(None, description="Форма волны для gw-ems")
    ratio: Optional[float] = Field(None, gt=0, lt=1, description="Отношение сторон трапеции")

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        """sw-ems, cfo-binning:16, gw-ems:triangle, gw-ems:trapezoid:0.4"""
        kind, *parts = text.strip().split(":")
        method = MethodKind(kind)
        if method is MethodKind.CFO_BINNING:
            if len(parts) != 1:
                raise ValueError("cfo-binning требует число бинов: cfo-binning:<c>")
            return cls(kind=method, bins=int(parts[0]))
        if method is MethodKind.GW_EMS:
            if not parts:
                raise ValueError("gw-ems требует форму: gw-ems:<square|trapezoid|triangle>[:ratio]")
            ratio = float(parts[1]) if len(parts) > 1 else None
            return cls(kind=method, shape=parts[0], ratio=ratio)
        if parts:
            raise ValueError(f"Метод {kind} не принимает параметров")
        return cls(kind=method)

    @property
    def label(self) -> str:
        if self.kind is MethodKind.CFO_BINNING:
            return f"{self.kind.value}:{self.bins}"
        if self.kind is MethodKind.GW_EMS:
            return ":".join([self.kind.value, self.shape] + ([f"{self.ratio:g}"] if self.ratio else []))
        return self.kind.value


class ExperimentConfig(BaseModel):
    """Конфигурация эксперимента (JSON файл)"""

    model_config = ConfigDict(frozen=True)

    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    methods: List[MethodSpec] = Field(..., min_length=1)
    epsilons: List[PositiveFloat] = Field(..., min_length=1)
    repetitions: int = Field(default_factory=lambda: config.harness_cfg.REPETITIONS, ge=1)
    metrics: List[str] = Field(..., min_length=1)
    seed: int = Field(default_factory=lambda: config.harness_cfg.SEED, ge=0, lt=2**64)
    output: Path = Field(Path("results"), description="Каталог результатов")
    threads: int = Field(default_factory=lambda: config.harness_cfg.THREADS, ge=1)
    range_trials: int = Field(default_factory=lambda: config.harness_cfg.RANGE_TRIALS, ge=1)
    b_grid: Optional[List[float]] = Field(None, description="Фиксированные b вместо оптимального")
    bucket_grid: Optional[List[int]] = Field(None, description="Гранулярности гистограммы")

    @field_validator("methods", mode="before")
    @classmethod
    def parse_methods(cls, value):
        return [MethodSpec.parse(item) if isinstance(item, str) else item for item in value]

    @field_validator("metrics")
    @classmethod
    def check_metrics(cls, value: List[str]) -> List[str]:
        for metric in value:
            family = metric_family(metric)
            if family not in DISTRIBUTION_METRICS:
                raise ValueError(f"Неизвестная метрика {metric!r}")
            if family == "range":
                range_alpha(metric)
        return value

    @field_validator("b_grid")
    @classmethod
    def check_b_grid(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(not 0 < b <= 0.5 for b in value):
            raise ValueError("Значения b_grid должны лежать в (0, 1/2]")
        return value

    @field_validator("bucket_grid")
    @classmethod
    def check_bucket_grid(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and any(d < 2 for d in value):
            raise ValueError("Значения bucket_grid должны быть не меньше 2")
        return value

    @property
    def config_hash(self) -> str:
        """Хэш конфигурации без путей вывода и числа потоков"""
        payload = self.model_dump_json(exclude={"output", "threads"})
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


class ResultRecord(BaseModel):
    """Одна метрика одной ячейки эксперимента"""

    model_config = ConfigDict(frozen=True)

    method: str
    dataset: str
    epsilon: float
    repetition: int
    metric: str
    value: float = Field(..., ge=0, allow_inf_nan=False)
    wall_ms: float = Field(0.0, ge=0)
    seed: int
    config_hash: str

    @property
    def sort_key(self):
        return self.method, self.dataset, self.epsilon, self.repetition, self.metric


class MethodOutput(BaseModel):
    """
    Результат одного метода: гистограмма (если есть), ответ на запрос
    диапазона бакетов [lo, hi) и оценки моментов для SR / PM.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    histogram: Optional[Histogram] = None
    range_answer: Optional[Callable[[int, int], float]] = None
    mean: Optional[float] = None
    variance: Optional[float] = None
