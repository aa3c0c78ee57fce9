"""
HaarHRR: коэффициенты Хаара бинарного дерева, оцениваемые через HRR по слоям.

Коэффициент узла a высоты l: c_a = (C_l - C_r) / 2^(l/2), где C_l и C_r -
массы левого и правого поддеревьев. У пользователя на каждом слое ровно
один ненулевой коэффициент: +1 в левом поддереве, -1 в правом.
"""

from typing import List, Tuple

import numpy as np

from app.core.exceptions import DataError, DomainError
from app.core.logging import logger
from app.schemas.hierarchy import HaarTree
from app.schemas.histogram import Histogram, Mechanism, ReportBatch
from app.schemas.privacy import HrrParams, PrivacyParams
from app.services.frequency_oracles import hadamard_entry, hrr_aggregate
from app.services.hierarchy import assign_layers
from app.utils.rng import Stream, make_rng


def haar_height(d: int) -> int:
    """Высота бинарного дерева над d листьями, дополненными до степени двойки"""
    return max(1, (d - 1).bit_length())


def haar_forward(leaves) -> HaarTree:
    """
    Прямое преобразование Хаара.

    Args:
        leaves: Массы 2^h листьев

    Returns:
        HaarTree: общая масса и нормированные коэффициенты по слоям
    """
    sums = np.asarray(leaves, dtype=np.float64)
    if sums.size < 2 or sums.size & (sums.size - 1):
        raise DomainError("Число листьев должно быть степенью двойки не меньше 2")
    coefficients: List[np.ndarray] = []
    layer = 0
    while sums.size > 1:
        layer += 1
        pairs = sums.reshape(-1, 2)
        coefficients.append((pairs[:, 0] - pairs[:, 1]) / 2 ** (layer / 2))
        sums = pairs.sum(axis=1)
    return HaarTree(total=float(sums[0]), coefficients=coefficients)


def haar_inverse(tree: HaarTree) -> np.ndarray:
    """Обратное преобразование: сверху вниз left = (T + D) / 2, right = (T - D) / 2"""
    sums = np.array([tree.total])
    for layer in range(tree.height, 0, -1):
        differences = tree.coefficients[layer - 1] * 2 ** (layer / 2)
        sums = np.column_stack([(sums + differences) / 2, (sums - differences) / 2]).ravel()
    return sums


def haar_perturb_batch(values, d: int, params: PrivacyParams, seed: int) -> ReportBatch:
    """
    HaarHRR отчеты: слой выбирается хэшем индекса пользователя, единственный
    ненулевой коэффициент слоя кодируется строкой матрицы Адамара и знаком.
    """
    height = haar_height(d)
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= d):
        raise DomainError(f"Индекс вне домена [0, {d})")
    n = values.shape[0]
    layers = assign_layers(n, height, seed)
    nodes = values >> layers
    coefficient_sign = 1 - 2 * ((values >> (layers - 1)) & 1)
    sizes = 1 << (height - layers)

    rng = make_rng(seed, Stream.PERTURB)
    rows = np.floor(rng.random(n) * sizes).astype(np.int64)
    keep = rng.random(n) < params.exp_eps / (params.exp_eps + 1)
    signs = coefficient_sign * hadamard_entry(rows, nodes) * np.where(keep, 1, -1)
    return ReportBatch(
        mechanism=Mechanism.HAAR,
        epsilon=params.epsilon,
        domain_size=d,
        values=signs,
        rows=rows,
        layers=layers,
    )


def haar_report(v: int, d: int, params: PrivacyParams, seed: int) -> Tuple[int, int, int]:
    """HaarHRR отчет одного пользователя: (слой, строка, знак)"""
    batch = haar_perturb_batch(np.array([v]), d, params, seed)
    return int(batch.layers[0]), int(batch.rows[0]), int(batch.values[0])


def haar_coefficients(reports: ReportBatch, d: int, params: PrivacyParams) -> HaarTree:
    """Несмещенные оценки коэффициентов каждого слоя, корневая масса 1"""
    if reports.layers is None or reports.rows is None:
        raise DataError("HaarHRR отчеты должны содержать слои и строки")
    height = haar_height(d)
    coefficients: List[np.ndarray] = []
    for layer in range(1, height + 1):
        size = 1 << (height - layer)
        mask = np.asarray(reports.layers) == layer
        if not np.any(mask):
            logger.warning("В слой Хаара %s не попал ни один пользователь", layer)
            coefficients.append(np.zeros(size))
            continue
        layer_params = HrrParams(epsilon=params.epsilon, d=size)
        differences = hrr_aggregate(reports.select(mask), layer_params).as_float()
        coefficients.append(differences / 2 ** (layer / 2))
    return HaarTree(total=1.0, coefficients=coefficients)


def haar_reconstruct(reports: ReportBatch, d: int, params: PrivacyParams) -> Histogram:
    """
    Листья HaarHRR: обратное преобразование оцененных коэффициентов.

    Returns:
        Histogram: ненормализованные листья (могут быть отрицательными)
    """
    leaves = haar_inverse(haar_coefficients(reports, d, params))
    return Histogram(values=leaves[:d])
