import click
from pydantic import ValidationError

from app.core.exceptions import ConfigError, LdpError
from app.core.logging import logger, setup_logging
from app.core.settings import config


class LdpGroup(click.Group):
    """Группа команд, переводящая ошибки библиотеки в коды выхода"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except ValidationError as exc:
            error = ConfigError(str(exc))
            logger.error("Некорректная конфигурация: %s", exc, exc_info=True)
            ctx.exit(error.exit_code)
        except LdpError as exc:
            logger.error("%s: %s", type(exc).__name__, exc, exc_info=True)
            ctx.exit(exc.exit_code)


@click.group(cls=LdpGroup, help=config.app_cfg.PROJECT_DESC)
@click.version_option(config.app_cfg.VERSION, prog_name=config.app_cfg.PROJECT_NAME)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Главное зерно")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Число рабочих потоков")
@click.option("--repetitions", type=click.IntRange(min=1), default=None, help="Число повторов")
@click.option("--log-level", default=None, help="Уровень логирования")
@click.pass_context
def cli(ctx: click.Context, seed, threads, repetitions, log_level):
    setup_logging(config.app_cfg.PROJECT_NAME, config.app_cfg.ENVIRONMENT, log_level)
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, threads=threads, repetitions=repetitions)


def resolve_seed(ctx: click.Context, seed):
    """Зерно команды: локальное, затем глобальное, затем из настроек"""
    if seed is not None:
        return seed
    if ctx.obj.get("seed") is not None:
        return ctx.obj["seed"]
    return config.harness_cfg.SEED
