"""Восстановление распределения по файлу отчетов"""
from pathlib import Path
from typing import Optional

import click
import pandas as pd

from app.core.exceptions import ConfigError
from app.core.logging import logger
from app.schemas.hierarchy import TreeShape
from app.schemas.histogram import Histogram, Mechanism, ReportBatch
from app.schemas.privacy import DiscreteSwParams, HrrParams, PrivacyParams, SwParams
from app.schemas.reconstruct import EmConfig
from app.services.baselines import mean_estimate
from app.services.frequency_oracles import cfo_aggregate, hrr_aggregate, norm_sub
from app.services.haar import haar_reconstruct
from app.services.hierarchy import constraint_matrix, hh_admm, hh_aggregate, hh_leaf_histogram
from app.services.reconstruct import estimate_from_reports
from app.services.transition import build_discrete_transition_matrix, build_transition_matrix
from app.utils.files import load_reports, write_histogram

from .base import cli

_EXPECTED = {
    "ems": (Mechanism.SW, Mechanism.SW_DISCRETE),
    "em": (Mechanism.SW, Mechanism.SW_DISCRETE),
    "normsub": (Mechanism.GRR, Mechanism.OLH, Mechanism.HRR),
    "hh": (Mechanism.HH,),
    "hh-admm": (Mechanism.HH,),
    "haar": (Mechanism.HAAR,),
    "mean": (Mechanism.SR, Mechanism.PM),
}


def estimate_histogram(method: str, batch: ReportBatch, epsilon: float, buckets: Optional[int]) -> Histogram:
    """
    Гистограмма по отчетам механизма, согласованного с методом.

    Raises:
        ConfigError: механизм отчетов не подходит методу или не задано число бакетов
    """
    if batch.mechanism not in _EXPECTED[method]:
        expected = ", ".join(item.value for item in _EXPECTED[method])
        raise ConfigError(f"Метод {method} ожидает отчеты {expected}, получено {batch.mechanism.value}")
    d = batch.domain_size or buckets
    if d is None:
        raise ConfigError(f"Метод {method} требует --buckets")
    params = PrivacyParams(epsilon=epsilon)

    if method in ("ems", "em"):
        if batch.mechanism is Mechanism.SW:
            M = build_transition_matrix(SwParams(epsilon=epsilon, b=batch.b), d)
        else:
            M = build_discrete_transition_matrix(DiscreteSwParams(epsilon=epsilon, d=d, b=int(batch.b)))
        return estimate_from_reports(batch.values, M, EmConfig.for_epsilon(epsilon, method == "ems")).histogram
    if method == "normsub":
        if batch.mechanism is Mechanism.HRR:
            return norm_sub(hrr_aggregate(batch, HrrParams(epsilon=epsilon, d=d)))
        return norm_sub(cfo_aggregate(batch, d))
    if method == "haar":
        return haar_reconstruct(batch, d, params)
    shape = TreeShape(d=d)
    tree = hh_aggregate(batch, shape, params)
    if method == "hh-admm":
        return hh_admm(tree, constraint_matrix(shape)).histogram
    return hh_leaf_histogram(tree)


@cli.command()
@click.option("--method", type=click.Choice(list(_EXPECTED)), required=True)
@click.option("--epsilon", type=click.FloatRange(min=0, min_open=True), default=None, help="По умолчанию из файла отчетов")
@click.option("--buckets", type=click.IntRange(min=2), default=None)
@click.option("--in", "source", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def estimate(method: str, epsilon, buckets, source: Path, out: Path):
    """Восстановить гистограмму (или среднее для SR / PM) по отчетам"""
    batch = load_reports(source)
    epsilon = epsilon or batch.epsilon
    if method == "mean":
        if batch.mechanism not in _EXPECTED[method]:
            raise ConfigError(f"Метод mean ожидает отчеты sr или pm, получено {batch.mechanism.value}")
        value = (mean_estimate(batch.values) + 1) / 2
        pd.DataFrame({"statistic": ["mean"], "value": [value]}).to_csv(out, index=False)
        logger.info("Оценка среднего %.6f записана в %s", value, out)
        return
    histogram = estimate_histogram(method, batch, epsilon, buckets)
    write_histogram(histogram, out)
    logger.info("Гистограмма (%s, d=%s) записана в %s", method, histogram.d, out)
