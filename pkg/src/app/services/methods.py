"""
Конвейеры методов оценки: рандомизация значений всех пользователей и
восстановление распределения выбранным методом.
"""

import math
from typing import Callable, Dict, Optional

import numpy as np

from app.core.exceptions import ConfigError
from app.core.logging import logger
from app.schemas.baselines import BinningConfig
from app.schemas.experiment import MethodKind, MethodOutput, MethodSpec
from app.schemas.hierarchy import TreeShape
from app.schemas.histogram import BucketSpec
from app.schemas.privacy import DiscreteSwParams, PrivacyParams
from app.schemas.reconstruct import EmConfig
from app.services.baselines import cfo_binning_pipeline, variance_protocol
from app.services.bucketing import bucket_indices
from app.services.haar import haar_perturb_batch, haar_reconstruct
from app.services.hierarchy import (
    constrained_inference,
    constraint_matrix,
    hh_admm,
    hh_aggregate,
    hh_perturb_batch,
    tree_range_query,
)
from app.services.metrics import prefix_answer
from app.services.reconstruct import estimate_from_reports
from app.services.transition import (
    build_discrete_transition_matrix,
    build_transition_matrix,
    build_wave_transition_matrix,
)
from app.services.wave import (
    discrete_b,
    gw_perturb_batch,
    sw_params,
    sw_perturb_batch,
    sw_perturb_discrete_batch,
    wave_shape,
)

Pipeline = Callable[[MethodSpec, np.ndarray, float, int, int, Optional[float]], MethodOutput]


def _with_histogram(histogram) -> MethodOutput:
    return MethodOutput(histogram=histogram, range_answer=prefix_answer(histogram))


def _square_wave(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    params = sw_params(epsilon, b)
    reports = sw_perturb_batch(values, params, seed)
    smoothing = spec.kind is MethodKind.SW_EMS
    result = estimate_from_reports(
        reports, build_transition_matrix(params, d), EmConfig.for_epsilon(epsilon, smoothing)
    )
    return _with_histogram(result.histogram)


def _bucketize_first(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    width = discrete_b(epsilon, d) if b is None else int(math.floor(b * d))
    params = DiscreteSwParams(epsilon=epsilon, d=d, b=width)
    indices = bucket_indices(values, BucketSpec(d=d))
    reports = sw_perturb_discrete_batch(indices, params, seed)
    result = estimate_from_reports(
        reports, build_discrete_transition_matrix(params), EmConfig.for_epsilon(epsilon, smoothing=True)
    )
    return _with_histogram(result.histogram)


def _general_wave(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    shape = wave_shape(spec.shape, epsilon, b=b, ratio=spec.ratio, equal_area=True)
    reports = gw_perturb_batch(values, shape, seed)
    result = estimate_from_reports(
        reports, build_wave_transition_matrix(shape, d), EmConfig.for_epsilon(epsilon, smoothing=True)
    )
    return _with_histogram(result.histogram)


def _binning(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    if d % spec.bins:
        raise ConfigError(f"Число бинов {spec.bins} должно делить число бакетов {d}")
    return _with_histogram(cfo_binning_pipeline(values, BinningConfig(c=spec.bins, d=d), epsilon, seed))


def _hierarchy(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    shape = TreeShape(d=d)
    params = PrivacyParams(epsilon=epsilon)
    indices = bucket_indices(values, BucketSpec(d=d))
    tree = hh_aggregate(hh_perturb_batch(indices, shape, params, seed), shape, params)
    if spec.kind is MethodKind.HH_ADMM:
        result = hh_admm(tree, constraint_matrix(shape))
        return _with_histogram(result.histogram)
    consistent = constrained_inference(tree)
    return MethodOutput(range_answer=lambda lo, hi: tree_range_query(consistent, lo, hi))


def _haar(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    params = PrivacyParams(epsilon=epsilon)
    indices = bucket_indices(values, BucketSpec(d=d))
    leaves = haar_reconstruct(haar_perturb_batch(indices, d, params, seed), d, params)
    return MethodOutput(range_answer=prefix_answer(leaves))


def _moments(spec: MethodSpec, values, epsilon, d, seed, b) -> MethodOutput:
    estimate = variance_protocol(values, spec.kind.value, PrivacyParams(epsilon=epsilon), seed)
    return MethodOutput(mean=estimate.mean, variance=estimate.variance)


PIPELINES: Dict[MethodKind, Pipeline] = {
    MethodKind.SW_EMS: _square_wave,
    MethodKind.SW_EM: _square_wave,
    MethodKind.SW_BR_EMS: _bucketize_first,
    MethodKind.GW_EMS: _general_wave,
    MethodKind.CFO_BINNING: _binning,
    MethodKind.HH: _hierarchy,
    MethodKind.HH_ADMM: _hierarchy,
    MethodKind.HAAR: _haar,
    MethodKind.SR: _moments,
    MethodKind.PM: _moments,
}


def run_method(
    spec: MethodSpec,
    values: np.ndarray,
    epsilon: float,
    d: int,
    seed: int,
    b: Optional[float] = None,
) -> MethodOutput:
    """
    Рандомизирует значения и восстанавливает распределение.

    Args:
        spec: Метод и его вариант
        values: Значения пользователей из [0, 1]
        epsilon: Бюджет приватности
        d: Число бакетов
        seed: Зерно ячейки
        b: Фиксированная полуширина волны вместо оптимальной

    Returns:
        MethodOutput
    """
    logger.debug("Метод %s: n=%s, eps=%s, d=%s, b=%s", spec.label, values.size, epsilon, d, b)
    return PIPELINES[spec.kind](spec, values, epsilon, d, seed, b)
