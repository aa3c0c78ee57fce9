"""Рандомизация значений пользователей"""
from pathlib import Path

import click
import numpy as np

from app.core.exceptions import ConfigError
from app.core.logging import logger
from app.schemas.hierarchy import TreeShape
from app.schemas.histogram import BucketSpec, Mechanism, ReportBatch
from app.schemas.privacy import (
    DiscreteSwParams,
    GrrParams,
    HrrParams,
    OlhParams,
    PrivacyParams,
)
from app.services.baselines import perturb_mean
from app.services.bucketing import bucket_indices
from app.services.frequency_oracles import grr_perturb_batch, hrr_perturb_batch, olh_perturb_batch
from app.services.haar import haar_perturb_batch
from app.services.hierarchy import hh_perturb_batch
from app.services.wave import discrete_b, sw_params, sw_perturb_batch, sw_perturb_discrete_batch
from app.utils.files import read_values, save_reports

from .base import cli, resolve_seed

# механизмы, работающие с индексами бакетов
_CATEGORICAL = ("sw-discrete", "grr", "olh", "hrr", "hh", "haar")


def perturb_values(
    mechanism: Mechanism, values: np.ndarray, epsilon: float, seed: int, buckets=None, b=None
) -> ReportBatch:
    """Отчеты выбранного механизма для значений из [0, 1]"""
    if mechanism.value in _CATEGORICAL:
        if buckets is None:
            raise ConfigError(f"Механизм {mechanism.value} требует --buckets")
        indices = bucket_indices(values, BucketSpec(d=buckets))
    if mechanism is Mechanism.SW:
        params = sw_params(epsilon, b)
        reports = sw_perturb_batch(values, params, seed)
        return ReportBatch(mechanism=mechanism, epsilon=epsilon, b=params.b, values=reports)
    if mechanism is Mechanism.SW_DISCRETE:
        width = discrete_b(epsilon, buckets) if b is None else int(np.floor(b * buckets))
        params = DiscreteSwParams(epsilon=epsilon, d=buckets, b=width)
        reports = sw_perturb_discrete_batch(indices, params, seed)
        return ReportBatch(mechanism=mechanism, epsilon=epsilon, domain_size=buckets, b=width, values=reports)
    if mechanism is Mechanism.GRR:
        return grr_perturb_batch(indices, GrrParams(epsilon=epsilon, d=buckets), seed)
    if mechanism is Mechanism.OLH:
        return olh_perturb_batch(indices, OlhParams.optimal(epsilon), seed, d=buckets)
    if mechanism is Mechanism.HRR:
        return hrr_perturb_batch(indices, HrrParams(epsilon=epsilon, d=buckets), seed)
    if mechanism is Mechanism.HH:
        return hh_perturb_batch(indices, TreeShape(d=buckets), PrivacyParams(epsilon=epsilon), seed)
    if mechanism is Mechanism.HAAR:
        return haar_perturb_batch(indices, buckets, PrivacyParams(epsilon=epsilon), seed)
    if mechanism in (Mechanism.SR, Mechanism.PM):
        reports = perturb_mean(2 * values - 1, mechanism.value, PrivacyParams(epsilon=epsilon), seed)
        return ReportBatch(mechanism=mechanism, epsilon=epsilon, values=reports)
    raise ConfigError(f"Механизм {mechanism.value} не поддерживается командой perturb")


@cli.command()
@click.option(
    "--mechanism",
    type=click.Choice(["sw", "sw-discrete", "grr", "olh", "hrr", "sr", "pm", "hh", "haar"]),
    required=True,
)
@click.option("--epsilon", type=click.FloatRange(min=0, min_open=True), required=True)
@click.option("--in", "source", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None)
@click.option("--buckets", type=click.IntRange(min=2), default=None, help="Число бакетов для категориальных механизмов")
@click.option("--b", "half_width", type=click.FloatRange(0, 0.5), default=None, help="Полуширина SW")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.pass_context
def perturb(ctx: click.Context, mechanism: str, epsilon: float, source: Path, seed, buckets, half_width, out: Path):
    """Рандомизировать значения и сохранить отчеты в npz"""
    values = read_values(source)
    batch = perturb_values(Mechanism(mechanism), values, epsilon, resolve_seed(ctx, seed), buckets, half_width)
    save_reports(batch, out)
    logger.info("Механизм %s: %s отчетов записано в %s", mechanism, batch.n, out)
