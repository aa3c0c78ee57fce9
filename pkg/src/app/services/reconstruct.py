"""
EM и EMS реконструкция входной гистограммы по агрегированным отчетам.
"""

import numpy as np

from app.core.exceptions import ConfigError, NumericalDegeneracyError
from app.core.logging import logger
from app.schemas.histogram import Histogram, ReportHistogram
from app.schemas.reconstruct import EmConfig, ReconstructionResult
from app.schemas.wave import TransitionMatrix
from app.services.bucketing import report_histogram

_KERNEL = np.array([0.25, 0.5, 0.25])


def _check_shapes(x: np.ndarray, matrix: np.ndarray, counts: np.ndarray) -> None:
    if matrix.shape != (counts.size, x.size):
        raise ConfigError(
            f"Размер матрицы {matrix.shape} не согласован с d={x.size}, d_out={counts.size}"
        )


def _predicted(x: np.ndarray, matrix: np.ndarray, counts: np.ndarray) -> np.ndarray:
    predicted = matrix @ x
    if np.any((predicted <= 0) & (counts > 0)):
        raise NumericalDegeneracyError("Нулевая вероятность выходного бакета с положительным счетчиком")
    return predicted


def _em_update(x: np.ndarray, matrix: np.ndarray, counts: np.ndarray) -> np.ndarray:
    predicted = _predicted(x, matrix, counts)
    ratio = np.divide(counts, predicted, out=np.zeros_like(predicted), where=counts > 0)
    posterior = x * (matrix.T @ ratio)
    return posterior / posterior.sum()


def _log_likelihood(x: np.ndarray, matrix: np.ndarray, counts: np.ndarray) -> float:
    predicted = _predicted(x, matrix, counts)
    mask = counts > 0
    return float(np.dot(counts[mask], np.log(predicted[mask])))


def _smooth(x: np.ndarray) -> np.ndarray:
    # краевое дополнение оставляет внешний вес 1/4 на крайнем бакете
    smoothed = np.convolve(np.pad(x, 1, mode="edge"), _KERNEL, mode="valid")
    return smoothed / smoothed.sum()


def em_step(x: Histogram, M: TransitionMatrix, counts: ReportHistogram) -> Histogram:
    """
    Один шаг E + M.

    E: P_i = x_i * sum_j n_j M_ji / (sum_k M_jk x_k); M: x_i = P_i / sum P.

    Raises:
        NumericalDegeneracyError: нулевой знаменатель при n_j > 0
    """
    values, n_j = x.as_float(), counts.counts.astype(np.float64)
    _check_shapes(values, M.matrix, n_j)
    return Histogram(values=_em_update(values, M.matrix, n_j), normalized=True)


def smooth(x: Histogram) -> Histogram:
    """Сглаживание ядром (1/4, 1/2, 1/4) с прижатыми краями"""
    return Histogram(values=_smooth(x.as_float()), normalized=True)


def log_likelihood(x: Histogram, M: TransitionMatrix, counts: ReportHistogram) -> float:
    """sum_j n_j ln(sum_i M_ji x_i)"""
    values, n_j = x.as_float(), counts.counts.astype(np.float64)
    _check_shapes(values, M.matrix, n_j)
    return _log_likelihood(values, M.matrix, n_j)


def reconstruct(counts: ReportHistogram, M: TransitionMatrix, cfg: EmConfig) -> ReconstructionResult:
    """
    Итерирует EM (и сглаживание для EMS) до |L_{t+1} - L_t| < tau или max_iters.

    Args:
        counts: Счетчики отчетов по выходным бакетам
        M: Матрица переходов
        cfg: Параметры EM

    Returns:
        ReconstructionResult: гистограмма на симплексе, число итераций,
        итоговый log-likelihood и флаг сходимости
    """
    n_j = counts.counts.astype(np.float64)
    matrix = M.matrix
    x = np.full(M.d, 1.0 / M.d)
    _check_shapes(x, matrix, n_j)

    current = _log_likelihood(x, matrix, n_j)
    trace = [current]
    converged = False
    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        x = _em_update(x, matrix, n_j)
        if cfg.smoothing:
            x = _smooth(x)
        updated = _log_likelihood(x, matrix, n_j)
        trace.append(updated)
        if abs(updated - current) < cfg.tau:
            current = updated
            converged = True
            break
        current = updated

    if not converged:
        logger.warning("EM не сошелся за %s итераций (tau=%s)", cfg.max_iters, cfg.tau)
    else:
        logger.debug("EM сошелся за %s итераций, L=%.6f", iteration, current)

    return ReconstructionResult(
        histogram=Histogram(values=x, normalized=True),
        iterations=iteration,
        log_likelihood=current,
        converged=converged,
        trace=trace,
    )


def estimate_from_reports(reports, M: TransitionMatrix, cfg: EmConfig) -> ReconstructionResult:
    """
    Бакетизует отчеты по выходному разбиению M и запускает EM / EMS.

    Для матрицы без разбиения (дискретный SW) отчеты уже являются
    индексами выходных бакетов.
    """
    reports = np.asarray(reports)
    if M.output_spec is not None:
        counts = report_histogram(reports, M.output_spec)
    else:
        indices = reports.astype(np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= M.d_out):
            raise ConfigError(f"Индекс отчета вне [0, {M.d_out})")
        counts = ReportHistogram(counts=np.bincount(indices, minlength=M.d_out))
    logger.debug("EM по %s отчетам, d=%s, d_out=%s", counts.n, M.d, M.d_out)
    return reconstruct(counts, M, cfg)
