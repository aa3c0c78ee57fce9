"""Генерация синтетического набора"""
from pathlib import Path

import click

from app.core.logging import logger
from app.schemas.experiment import DatasetSpec
from app.services.datasets import load_dataset
from app.utils.files import write_values

from .base import cli, resolve_seed


@cli.command()
@click.option("--dist", type=click.Choice(["beta"]), default="beta", show_default=True)
@click.option("--a", "alpha", type=float, default=5.0, show_default=True)
@click.option("--b", "beta", type=float, default=2.0, show_default=True)
@click.option("--n", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.pass_context
def gen(ctx: click.Context, dist: str, alpha: float, beta: float, n: int, seed, out: Path):
    """Сгенерировать значения Beta(a, b) в CSV"""
    spec = DatasetSpec(name=dist, source=dist, a=alpha, b=beta, n=n)
    values = load_dataset(spec, resolve_seed(ctx, seed))
    write_values(values, out)
    logger.info("Записано %s значений в %s", values.size, out)
