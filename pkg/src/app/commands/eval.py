"""Сравнение оценки с истинным распределением"""
from pathlib import Path
from typing import List, Optional

import click
import pandas as pd

from app.core.exceptions import ConfigError
from app.core.settings import config
from app.schemas.experiment import DISTRIBUTION_METRICS, metric_family, range_alpha
from app.schemas.histogram import Histogram
from app.services.bucketing import true_histogram
from app.services.metrics import (
    ks_distance,
    mean_of,
    quantiles_mae,
    range_query_mae,
    variance_of,
    wasserstein,
)
from app.utils.files import read_histogram, read_values

from .base import cli, resolve_seed


def histogram_metric(metric: str, truth: Histogram, estimate: Histogram, seed: int) -> float:
    family = metric_family(metric)
    if family == "w1":
        return wasserstein(truth, estimate)
    if family == "ks":
        return ks_distance(truth, estimate)
    if family == "range":
        return range_query_mae(truth, estimate, range_alpha(metric), config.harness_cfg.RANGE_TRIALS, seed)
    if family == "mean":
        return abs(mean_of(truth) - mean_of(estimate))
    if family == "var":
        return abs(variance_of(truth) - variance_of(estimate))
    if family == "quantiles":
        return quantiles_mae(truth, estimate)
    raise ConfigError(f"Неизвестная метрика {metric!r}. Допустимые: {', '.join(DISTRIBUTION_METRICS)}")


@cli.command(name="eval")
@click.option("--truth", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="CSV значений")
@click.option("--estimate", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="CSV гистограммы")
@click.option("--metrics", default="w1,ks,range:0.1,range:0.4,mean,var,quantiles", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_context
def evaluate(ctx: click.Context, truth: Path, estimate: Path, metrics: str, out: Optional[Path]):
    """Посчитать метрики оценки относительно истинной гистограммы"""
    names: List[str] = [name.strip() for name in metrics.split(",") if name.strip()]
    histogram = read_histogram(estimate)
    reference = true_histogram(read_values(truth), histogram.d)
    seed = resolve_seed(ctx, None)
    frame = pd.DataFrame(
        {"metric": names, "value": [histogram_metric(name, reference, histogram, seed) for name in names]}
    )
    if out is not None:
        frame.to_csv(out, index=False)
    click.echo(frame.to_csv(index=False), nl=False)
