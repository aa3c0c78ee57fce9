"""Чтение и запись файлов CLI: значения, гистограммы и пакеты отчетов"""
import json
import zipfile
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.exceptions import DatasetParseError, DatasetReadError
from app.schemas.histogram import Histogram, ReportBatch
from app.services.datasets import read_values_csv

_ARRAYS = ("values", "keys", "rows", "layers")


def write_values(values: np.ndarray, path: Path) -> None:
    pd.DataFrame({"value": np.asarray(values, dtype=np.float64)}).to_csv(path, index=False, float_format="%.17g")


def read_values(path: Path) -> np.ndarray:
    return read_values_csv(path)


def write_histogram(histogram: Histogram, path: Path) -> None:
    """CSV с колонками bucket, value"""
    frame = pd.DataFrame({"bucket": np.arange(histogram.d), "value": histogram.as_float()})
    frame.to_csv(path, index=False, float_format="%.17g")


def read_histogram(path: Path, normalized: bool = False) -> Histogram:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DatasetReadError(f"Не удалось прочитать гистограмму {path}: {exc}") from exc
    if "value" not in frame.columns:
        raise DatasetParseError(f"В {path} нет колонки value")
    values = pd.to_numeric(frame["value"], errors="coerce")
    if values.isna().any() or values.empty:
        raise DatasetParseError(f"Нечисловые значения гистограммы в {path}")
    if "bucket" in frame.columns:
        values = values.to_numpy()[np.argsort(frame["bucket"].to_numpy(), kind="stable")]
    else:
        values = values.to_numpy()
    return Histogram(values=values.astype(np.float64), normalized=normalized)


def save_reports(batch: ReportBatch, path: Path) -> None:
    """npz архив: массивы отчетов и метаданные механизма в JSON"""
    meta = batch.model_dump(include={"mechanism", "epsilon", "domain_size", "b"}, mode="json")
    arrays = {name: getattr(batch, name) for name in _ARRAYS if getattr(batch, name) is not None}
    with path.open("wb") as stream:
        np.savez(stream, meta=np.array(json.dumps(meta)), **arrays)


def load_reports(path: Path) -> ReportBatch:
    try:
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(str(archive["meta"]))
            arrays = {name: archive[name] for name in _ARRAYS if name in archive.files}
    except (OSError, KeyError, ValueError, zipfile.BadZipFile) as exc:
        raise DatasetReadError(f"Не удалось прочитать отчеты {path}: {exc}") from exc
    return ReportBatch(**meta, **arrays)
