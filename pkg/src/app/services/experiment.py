"""
Запуск экспериментов: сетка ячеек (метод, вариант, eps, повтор),
параллельное выполнение на рабочих потоках, оценка метрик и сводка.
"""

import time
from functools import partial
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import anyio
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.context import cell_var, run_id_var
from app.core.exceptions import ConfigError, InvalidMethodMetricError
from app.core.logging import logger
from app.schemas.experiment import (
    VALID_METRICS,
    ExperimentConfig,
    MethodKind,
    MethodOutput,
    MethodSpec,
    ResultRecord,
    metric_family,
    range_alpha,
)
from app.schemas.histogram import Histogram
from app.services.bucketing import true_histogram
from app.services.datasets import load_dataset
from app.services.methods import run_method
from app.services.metrics import (
    ks_distance,
    mean_of,
    quantiles_mae,
    range_query_errors,
    variance_of,
    wasserstein,
)
from app.utils.rng import Stream, derive_seed

# методы, для которых b_grid задает полуширину волны
_B_SWEEP = (MethodKind.SW_EMS, MethodKind.SW_EM, MethodKind.SW_BR_EMS, MethodKind.GW_EMS)


class Cell(BaseModel):
    """Ячейка эксперимента"""

    model_config = ConfigDict(frozen=True)

    method: MethodSpec
    label: str
    epsilon: float
    repetition: int
    buckets: int
    b: Optional[float] = None
    seed: int


def validate_pairs(cfg: ExperimentConfig) -> None:
    """
    Raises:
        InvalidMethodMetricError: метрика не применима к методу
    """
    valid = {kind.value: list(metrics) for kind, metrics in VALID_METRICS.items()}
    for method in cfg.methods:
        for metric in cfg.metrics:
            if metric_family(metric) not in VALID_METRICS[method.kind]:
                raise InvalidMethodMetricError(method.label, metric, valid)


def build_cells(cfg: ExperimentConfig) -> List[Cell]:
    """
    Все ячейки конфигурации.

    Зерно ячейки зависит только от (d, eps, повтор): методы и значения b
    в одном повторе видят одни и те же случайные числа.
    """
    validate_pairs(cfg)
    bucket_grid = cfg.bucket_grid or [cfg.dataset.bucket_count]
    cells: List[Cell] = []
    for method in cfg.methods:
        b_grid = cfg.b_grid if cfg.b_grid and method.kind in _B_SWEEP else [None]
        for b in b_grid:
            for d_index, d in enumerate(bucket_grid):
                if method.kind is MethodKind.CFO_BINNING and d % method.bins:
                    raise ConfigError(f"Число бинов {method.bins} должно делить число бакетов {d}")
                label = method.label
                if b is not None:
                    label += f"@b={b:g}"
                if cfg.bucket_grid:
                    label += f"@d={d}"
                for eps_index, epsilon in enumerate(cfg.epsilons):
                    for repetition in range(cfg.repetitions):
                        seed = derive_seed(cfg.seed, Stream.CELL, d_index, eps_index, repetition)
                        cells.append(
                            Cell(
                                method=method,
                                label=label,
                                epsilon=epsilon,
                                repetition=repetition,
                                buckets=d,
                                b=b,
                                seed=seed,
                            )
                        )
    return cells


def evaluate_metric(
    metric: str,
    output: MethodOutput,
    values: np.ndarray,
    truth: Histogram,
    trials: int,
    seed: int,
) -> float:
    """Значение одной метрики для результата метода"""
    family = metric_family(metric)
    estimate = output.histogram
    if family == "range":
        errors = range_query_errors(truth, output.range_answer, range_alpha(metric), trials, seed)
        return float(errors.mean())
    if family == "mean":
        if output.mean is not None:
            return abs(float(values.mean()) - output.mean)
        return abs(mean_of(truth) - mean_of(estimate))
    if family == "var":
        if output.variance is not None:
            return abs(float(values.var()) - output.variance)
        return abs(variance_of(truth) - variance_of(estimate))
    if family == "w1":
        return wasserstein(truth, estimate)
    if family == "ks":
        return ks_distance(truth, estimate)
    if family == "quantiles":
        return quantiles_mae(truth, estimate)
    raise ConfigError(f"Неизвестная метрика {metric!r}")


def run_cell(
    cell: Cell,
    values: np.ndarray,
    truths: Dict[int, Histogram],
    cfg: ExperimentConfig,
    dataset: str,
    config_hash: str,
) -> List[ResultRecord]:
    """Рандомизация, восстановление и метрики одной ячейки"""
    cell_var.set(f"{cell.label}/eps={cell.epsilon:g}/rep={cell.repetition}")
    started = time.perf_counter()
    output = run_method(cell.method, values, cell.epsilon, cell.buckets, cell.seed, cell.b)
    wall_ms = (time.perf_counter() - started) * 1000.0
    records = [
        ResultRecord(
            method=cell.label,
            dataset=dataset,
            epsilon=cell.epsilon,
            repetition=cell.repetition,
            metric=metric,
            value=evaluate_metric(metric, output, values, truths[cell.buckets], cfg.range_trials, cell.seed),
            wall_ms=wall_ms,
            seed=cell.seed,
            config_hash=config_hash,
        )
        for metric in cfg.metrics
    ]
    logger.debug("Ячейка готова за %.1f мс", wall_ms)
    return records


async def run_experiment_async(cfg: ExperimentConfig, values: Optional[np.ndarray] = None) -> List[ResultRecord]:
    """
    Выполняет все ячейки на рабочих потоках (не больше cfg.threads одновременно).

    Args:
        cfg: Конфигурация эксперимента
        values: Готовые значения пользователей вместо загрузки набора

    Returns:
        List[ResultRecord]: записи, отсортированные по (метод, набор, eps, повтор, метрика)

    Raises:
        ConfigError: ошибка валидации внутри ячейки
        Exception: первая ошибка ячейки без обертки в ExceptionGroup
    """
    config_hash = cfg.config_hash
    run_id_var.set(config_hash)
    cells = build_cells(cfg)
    if values is None:
        values = load_dataset(cfg.dataset, cfg.seed)
    grid = cfg.bucket_grid or [cfg.dataset.bucket_count]
    truths = {d: true_histogram(values, d) for d in grid}
    logger.info(
        "Эксперимент %s: %s ячеек, n=%s, потоков %s", config_hash, len(cells), values.size, cfg.threads
    )

    limiter = anyio.CapacityLimiter(cfg.threads)
    records: List[ResultRecord] = []
    errors: List[Exception] = []

    async def worker(cell: Cell) -> None:
        job = partial(run_cell, cell, values, truths, cfg, cfg.dataset.name, config_hash)
        try:
            records.extend(await anyio.to_thread.run_sync(job, limiter=limiter))
        except ValidationError as exc:
            errors.append(ConfigError(f"Ячейка {cell.label}: {exc}"))
            group.cancel_scope.cancel()
        except Exception as exc:
            errors.append(exc)
            group.cancel_scope.cancel()

    async with anyio.create_task_group() as group:
        for cell in cells:
            group.start_soon(worker, cell)

    if errors:
        raise errors[0]
    records.sort(key=lambda record: record.sort_key)
    logger.info("Эксперимент %s завершен: %s записей", config_hash, len(records))
    return records


def run_experiment(cfg: ExperimentConfig, values: Optional[np.ndarray] = None) -> List[ResultRecord]:
    """Синхронная обертка над run_experiment_async"""
    return anyio.run(run_experiment_async, cfg, values)


def summarize(records: Iterable[ResultRecord]) -> pd.DataFrame:
    """
    Среднее и выборочное стандартное отклонение по ячейкам
    (метод, набор, eps, метрика).
    """
    frame = pd.DataFrame([record.model_dump() for record in records])
    if frame.empty:
        return pd.DataFrame(columns=["method", "dataset", "epsilon", "metric", "mean", "std", "count", "wall_ms"])
    summary = (
        frame.groupby(["method", "dataset", "epsilon", "metric"], sort=True)
        .agg(
            mean=("value", "mean"),
            std=("value", lambda column: column.std(ddof=1)),
            count=("value", "size"),
            wall_ms=("wall_ms", "mean"),
        )
        .reset_index()
    )
    summary["std"] = summary["std"].fillna(0.0)
    return summary


def write_records(records: Iterable[ResultRecord], path: Path) -> None:
    """JSONL, одна запись на строку; время выполнения не пишется"""
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda record: record.sort_key)
    with path.open("w", encoding="utf-8") as stream:
        for record in ordered:
            stream.write(record.model_dump_json(exclude={"wall_ms"}) + "\n")


def write_summary(summary: pd.DataFrame, path: Path, seed: int, config_hash: str) -> None:
    """Сводная таблица CSV с зерном и хэшем конфигурации"""
    path.parent.mkdir(parents=True, exist_ok=True)
    summary.assign(seed=seed, config_hash=config_hash).to_csv(path, index=False)


def output_paths(cfg: ExperimentConfig) -> Tuple[Path, Path]:
    """Пути records.jsonl и summary.csv внутри каталога результатов"""
    stem = f"{cfg.dataset.name}-{cfg.config_hash}"
    return cfg.output / f"{stem}.records.jsonl", cfg.output / f"{stem}.summary.csv"
