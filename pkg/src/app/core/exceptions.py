from typing import Dict, List


class LdpError(Exception):
    """Базовая ошибка библиотеки, несет код выхода для CLI"""

    exit_code: int = 1


class ConfigError(LdpError):
    """Некорректная конфигурация или параметры"""

    exit_code = 2


class DomainError(ConfigError, ValueError):
    """Значение вне входной области механизма"""


class InvalidMethodMetricError(ConfigError):
    """Метрика не применима к методу"""

    def __init__(self, method: str, metric: str, valid_pairs: Dict[str, List[str]]):
        self.method = method
        self.metric = metric
        self.valid_pairs = valid_pairs
        listing = "; ".join(
            f"{name}: {', '.join(metrics)}" for name, metrics in valid_pairs.items()
        )
        super().__init__(
            f"Метрика {metric!r} не применима к методу {method!r}. Допустимые пары: {listing}"
        )


class DataError(LdpError):
    """Ошибка входных данных"""

    exit_code = 3


class DatasetReadError(DataError):
    pass


class DatasetParseError(DataError):
    pass


class EmptyDatasetError(DataError):
    pass


class NumericalDegeneracyError(LdpError):
    """Вырожденная численная ситуация (нулевой знаменатель, log(0))"""

    exit_code = 4
