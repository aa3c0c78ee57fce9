"""
Загрузка и предобработка наборов данных в [0, 1].
"""

from pathlib import Path

import numpy as np
import pandas as pd

from app.core.exceptions import DatasetParseError, DatasetReadError, EmptyDatasetError
from app.core.logging import logger
from app.schemas.experiment import DatasetSpec
from app.utils.rng import Stream, make_rng


def read_values_csv(path: Path) -> np.ndarray:
    """
    Читает CSV с одним числом в строке.

    Заголовок определяется по нечисловой первой строке.

    Raises:
        DatasetReadError: файл не читается
        DatasetParseError: нечисловые строки
        EmptyDatasetError: нет ни одного значения
    """
    try:
        frame = pd.read_csv(path, header=None, usecols=[0], dtype=str, skip_blank_lines=True)
    except pd.errors.EmptyDataError as exc:
        raise EmptyDatasetError(f"Файл {path} пуст") from exc
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DatasetReadError(f"Не удалось прочитать {path}: {exc}") from exc

    column = frame.iloc[:, 0].str.strip()
    parsed = pd.to_numeric(column, errors="coerce")
    if len(parsed) and np.isnan(parsed.iloc[0]):
        column, parsed = column.iloc[1:], parsed.iloc[1:]
    bad = parsed.isna()
    if bad.any():
        first = int(np.flatnonzero(bad.to_numpy())[0])
        raise DatasetParseError(
            f"Нечисловое значение {column.iloc[first]!r} в {path} (строка данных {first + 1})"
        )
    if parsed.empty:
        raise EmptyDatasetError(f"В {path} нет значений")
    return parsed.to_numpy(dtype=np.float64)


def preprocess(raw: np.ndarray, spec: DatasetSpec) -> np.ndarray:
    """
    Фильтр [lo, hi) и аффинное отображение (v - lo) / (hi - lo).
    Без фильтра значения должны уже лежать в [0, 1].
    """
    bounds = spec.filter_range
    if bounds is None:
        outside = (raw < 0) | (raw > 1)
        if np.any(outside):
            raise DatasetParseError(
                f"Набор {spec.name}: {int(outside.sum())} значений вне [0, 1] без правила фильтрации"
            )
        values = raw
    else:
        lo, hi = bounds
        kept = raw[(raw >= lo) & (raw < hi)]
        logger.info("Набор %s: отфильтровано %s из %s значений", spec.name, raw.size - kept.size, raw.size)
        values = (kept - lo) / (hi - lo)
    if values.size == 0:
        raise EmptyDatasetError(f"Набор {spec.name} пуст после фильтрации")
    return values


def load_dataset(spec: DatasetSpec, seed: int) -> np.ndarray:
    """
    Значения пользователей из [0, 1].

    Args:
        spec: Описание набора
        seed: Зерно синтетики и подвыборки

    Returns:
        np.ndarray
    """
    if spec.source == "beta":
        values = make_rng(seed, Stream.DATASET).beta(spec.a, spec.b, size=spec.n)
    else:
        values = preprocess(read_values_csv(spec.path), spec)

    if spec.subsample and values.size > spec.max_users:
        chosen = make_rng(seed, Stream.DATASET, 1).choice(values.size, size=spec.max_users, replace=False)
        values = values[np.sort(chosen)]
        logger.info("Набор %s: подвыборка %s пользователей", spec.name, spec.max_users)

    logger.info("Набор %s загружен: n=%s", spec.name, values.size)
    return values
