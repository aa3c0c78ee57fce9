import logging
import sys

import logging_loki

from app.core.context import cell_var, run_id_var
from app.core.settings import config


class ContextFilter(logging.Filter):
    """Добавляет run_id и cell в каждую запись лога"""

    def filter(self, record):
        record.run_id = run_id_var.get()
        record.cell = cell_var.get()
        return True


def setup_logging(
    service_name: str = "ldp-numeric-distribution",
    environment: str = "development",
    level: str | None = None,
):
    """
    Настраивает логирование один раз при старте CLI
    """
    logger = logging.getLogger()
    logger.setLevel(level or config.app_cfg.LOGLEVEL)

    logger.handlers.clear()

    context_filter = ContextFilter()

    console_handler = logging.StreamHandler(sys.stdout)
    console_formatter = logging.Formatter(
        "[%(run_id)s] [%(cell)s] %(asctime)s | %(levelname)s | %(funcName)s:%(lineno)d | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    console_handler.setFormatter(console_formatter)
    console_handler.addFilter(context_filter)
    logger.addHandler(console_handler)

    if config.app_cfg.LOKI_URL:
        loki_handler = logging_loki.LokiHandler(
            url=config.app_cfg.LOKI_URL,
            tags={
                "service": service_name,
                "environment": environment,
            },
            version="1",
        )
        loki_handler.setLevel(logging.INFO)
        loki_formatter = logging.Formatter(
            "%(run_id)s | %(cell)s | %(levelname)s | %(funcName)s:%(lineno)d | %(message)s"
        )
        loki_handler.setFormatter(loki_formatter)
        loki_handler.addFilter(context_filter)
        logger.addHandler(loki_handler)

    # Отключаем DEBUG логи от сторонних библиотек
    logging.getLogger("asyncio").setLevel(logging.WARNING)
    logging.getLogger("anyio").setLevel(logging.WARNING)
    logging.getLogger("urllib3").setLevel(logging.WARNING)

    logging.info("Logging configured for service: %s", service_name)


# Используем root логгер, чтобы ContextFilter работал везде
logger = logging.getLogger()
