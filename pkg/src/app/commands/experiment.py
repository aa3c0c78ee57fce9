"""Запуск эксперимента по JSON конфигурации"""
from pathlib import Path

import click
from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.core.logging import logger
from app.schemas.experiment import ExperimentConfig
from app.services.experiment import output_paths, run_experiment, summarize, write_records, write_summary

from .base import cli


def load_config(path: Path, overrides: dict) -> ExperimentConfig:
    """Читает конфигурацию и применяет глобальные опции CLI"""
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Не удалось прочитать конфигурацию {path}: {exc}") from exc
    try:
        cfg = ExperimentConfig.model_validate_json(raw)
    except ValidationError as exc:
        raise ConfigError(f"Некорректная конфигурация {path}: {exc}") from exc
    update = {key: value for key, value in overrides.items() if value is not None}
    return cfg.model_validate({**cfg.model_dump(), **update}) if update else cfg


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.pass_context
def experiment(ctx: click.Context, config_path: Path):
    """Выполнить эксперимент и записать записи JSONL и сводку CSV"""
    cfg = load_config(config_path, ctx.obj)
    records = run_experiment(cfg)
    records_path, summary_path = output_paths(cfg)
    write_records(records, records_path)
    write_summary(summarize(records), summary_path, cfg.seed, cfg.config_hash)
    logger.info("Записи: %s, сводка: %s", records_path, summary_path)
    click.echo(summary_path)
