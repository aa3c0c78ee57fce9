"""
Иерархические гистограммы (HH): разбиение пользователей по слоям,
согласование дерева и пост-обработка HH-ADMM.
"""

from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse

from app.core.exceptions import DataError, DomainError
from app.core.logging import logger
from app.schemas.hierarchy import AdmmOptions, AdmmResult, AdmmState, HierarchyTree, TreeShape
from app.schemas.histogram import Histogram, Mechanism, ReportBatch
from app.schemas.privacy import PrivacyParams
from app.services.bucketing import normalize
from app.services.frequency_oracles import cfo_aggregate, cfo_perturb_batch, choose_cfo, norm_sub
from app.utils.hashing import hash_mod
from app.utils.rng import Stream, derive_seed


def assign_layers(n: int, height: int, seed: int, first_user: int = 0) -> np.ndarray:
    """Слой каждого пользователя: хэш (seed, индекс пользователя) mod h, плюс 1"""
    users = np.arange(first_user, first_user + n, dtype=np.uint64)
    key = np.uint64(derive_seed(seed, Stream.LAYER))
    return hash_mod(users, key, height) + 1


def constraint_matrix(shape: TreeShape) -> sparse.csr_matrix:
    """
    Матрица A: строка на каждый внутренний узел, +1 на узле и -1 на детях.
    Столбцы в порядке вектора узлов.
    """
    offsets = shape.offsets()
    rows, cols, data = [], [], []
    row = 0
    for layer in range(shape.height + 1, 1, -1):
        parent_offset, child_offset = offsets[layer - 1], offsets[layer - 2]
        for node in range(shape.layer_size(layer)):
            rows.append(row)
            cols.append(parent_offset + node)
            data.append(1.0)
            for child in range(node * shape.beta, (node + 1) * shape.beta):
                rows.append(row)
                cols.append(child_offset + child)
                data.append(-1.0)
            row += 1
    return sparse.csr_matrix((data, (rows, cols)), shape=(row, shape.node_count))


# --- отчеты и агрегация ---


def hh_perturb_batch(values, shape: TreeShape, params: PrivacyParams, seed: int) -> ReportBatch:
    """
    HH отчеты: пользователь попадает в один слой и сообщает предка своего
    значения в этом слое через CFO, выбранный по числу узлов слоя, с полным eps.

    Args:
        values: Индексы листьев из [0, d)
        shape: Форма дерева
        params: Бюджет приватности
        seed: Зерно

    Returns:
        ReportBatch с тегами слоев
    """
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= shape.d):
        raise DomainError(f"Индекс вне домена [0, {shape.d})")
    layers = assign_layers(values.shape[0], shape.height, seed)
    reports = np.zeros(values.shape[0], dtype=np.int64)
    keys = np.zeros(values.shape[0], dtype=np.uint64)
    for layer in range(1, shape.height + 1):
        mask = layers == layer
        ancestors = values[mask] // shape.beta ** (layer - 1)
        _, batch = cfo_perturb_batch(
            ancestors, shape.layer_size(layer), params.epsilon, derive_seed(seed, Stream.PERTURB, layer)
        )
        reports[mask] = batch.values
        if batch.keys is not None:
            keys[mask] = batch.keys
    return ReportBatch(
        mechanism=Mechanism.HH,
        epsilon=params.epsilon,
        domain_size=shape.d,
        values=reports,
        keys=keys,
        layers=layers,
    )


def hh_report(v: int, shape: TreeShape, params: PrivacyParams, seed: int) -> Tuple[int, int]:
    """HH отчет одного пользователя: (слой, рандомизированный узел или хэш)"""
    batch = hh_perturb_batch(np.array([v]), shape, params, seed)
    return int(batch.layers[0]), int(batch.values[0])


def hh_aggregate(reports: ReportBatch, shape: TreeShape, params: PrivacyParams) -> HierarchyTree:
    """
    Несмещенные оценки частот каждого слоя его собственным CFO.

    Raises:
        DataError: слой без пользователей
    """
    if reports.layers is None:
        raise DataError("HH отчеты должны содержать теги слоев")
    estimates: List[np.ndarray] = []
    user_counts: List[int] = []
    for layer in range(1, shape.height + 1):
        mask = np.asarray(reports.layers) == layer
        count = int(np.count_nonzero(mask))
        if count == 0:
            raise DataError(f"В слой {layer} не попал ни один пользователь")
        size = shape.layer_size(layer)
        subset = reports.select(mask)
        mechanism = Mechanism(choose_cfo(size, params).value)
        subset = subset.model_copy(update={"mechanism": mechanism, "epsilon": params.epsilon})
        estimates.append(cfo_aggregate(subset, size).as_float())
        user_counts.append(count)
    estimates.append(np.ones(1))
    user_counts.append(0)
    logger.debug("HH агрегация: пользователей по слоям %s", user_counts[:-1])
    return HierarchyTree(shape=shape, layers=estimates, user_counts=user_counts)


# --- проекции ---


def _levels_top_down(shape: TreeShape, vector: np.ndarray) -> List[np.ndarray]:
    offsets = shape.offsets()
    return [
        vector[offsets[layer - 1]:offsets[layer - 1] + shape.layer_size(layer)]
        for layer in range(shape.height + 1, 0, -1)
    ]


def project_tree_consistency(vector: np.ndarray, shape: TreeShape) -> np.ndarray:
    """
    Проекция Pi_C на согласованные деревья (сумма детей = родитель).

    Двухпроходная схема Хэя: снизу вверх
    z = (beta^i - beta^(i-1)) / (beta^i - 1) x + (beta^(i-1) - 1) / (beta^i - 1) sum(z детей),
    сверху вниз x_child = z_child + (x_parent - sum(z братьев)) / beta.
    Совпадает с решением наименьших квадратов при равной дисперсии узлов.
    """
    beta = shape.beta
    levels = _levels_top_down(shape, np.asarray(vector, dtype=np.float64))
    # снизу вверх: levels[-1] - листья (высота 1)
    z = [None] * len(levels)
    z[-1] = levels[-1].copy()
    for index in range(len(levels) - 2, -1, -1):
        height = len(levels) - index
        children = z[index + 1].reshape(-1, beta).sum(axis=1)
        denominator = beta**height - 1
        z[index] = (
            (beta**height - beta ** (height - 1)) / denominator * levels[index]
            + (beta ** (height - 1) - 1) / denominator * children
        )
    consistent = [z[0]]
    for index in range(1, len(levels)):
        sibling_sum = z[index].reshape(-1, beta).sum(axis=1)
        correction = (consistent[index - 1] - sibling_sum) / beta
        consistent.append(z[index] + np.repeat(correction, beta))
    return np.concatenate(consistent)


def project_nonneg_normalized(vector: np.ndarray, shape: TreeShape) -> np.ndarray:
    """Проекция Pi_N+: Norm-Sub на каждом уровне, каждый уровень суммируется в 1"""
    levels = _levels_top_down(shape, np.asarray(vector, dtype=np.float64))
    return np.concatenate([norm_sub(Histogram(values=level)).values for level in levels])


def constrained_inference(tree: HierarchyTree) -> HierarchyTree:
    """Согласованное дерево, ближайшее к оценкам по L2"""
    vector = project_tree_consistency(tree.to_vector(), tree.shape)
    return HierarchyTree.from_vector(tree.shape, vector, tree.user_counts)


def consistent_from_leaves(leaves: np.ndarray, shape: TreeShape) -> np.ndarray:
    """Вектор узлов, где каждый внутренний узел равен сумме своих листьев"""
    levels = [np.asarray(leaves, dtype=np.float64)]
    while levels[-1].size > 1:
        levels.append(levels[-1].reshape(-1, shape.beta).sum(axis=1))
    return np.concatenate(levels[::-1])


def hh_leaf_histogram(tree: HierarchyTree) -> Histogram:
    """Листья после согласования и Norm-Sub, без дополнения"""
    consistent = constrained_inference(tree)
    return norm_sub(Histogram(values=consistent.leaf_values))


def tree_range_query(tree: HierarchyTree, lo: int, hi: int) -> float:
    """
    Сумма по диапазону листьев [lo, hi) через минимальное покрытие узлами дерева.
    """
    if not 0 <= lo <= hi <= tree.shape.leaves:
        raise DomainError(f"Диапазон [{lo}, {hi}) вне дерева")
    beta = tree.shape.beta
    total = 0.0
    layer = 1
    while lo < hi:
        values = tree.layers[layer - 1]
        while lo < hi and lo % beta:
            total += values[lo]
            lo += 1
        while lo < hi and hi % beta:
            hi -= 1
            total += values[hi]
        if lo >= hi:
            break
        if layer == tree.shape.height + 1:
            total += values[lo:hi].sum()
            break
        lo, hi, layer = lo // beta, hi // beta, layer + 1
    return float(total)


# --- HH-ADMM ---


def _objective(x: np.ndarray, noisy: np.ndarray) -> float:
    return 0.5 * float(np.sum((x - noisy) ** 2))


def hh_admm(
    tree: HierarchyTree,
    A: Optional[sparse.csr_matrix] = None,
    options: Optional[AdmmOptions] = None,
) -> AdmmResult:
    """
    Решает min 1/2 ||x - x~||^2 при Ax = 0, x >= 0, x_0 = 1 методом ADMM.

    Args:
        tree: Оценки дерева (корень x~_0 = 1)
        A: Матрица ограничений; по ней считается constraint_residual
        options: rho, допуск и предел итераций

    Returns:
        AdmmResult: листья на симплексе и диагностика
    """
    options = options or AdmmOptions()
    shape = tree.shape
    noisy = tree.to_vector()
    noisy[0] = 1.0
    state = AdmmState.start(noisy, options.rho)
    objective: List[float] = []
    converged = False
    residual = float("inf")
    iteration = 0
    for iteration in range(1, options.max_iters + 1):
        state.y = (state.x - noisy + state.mu) / 2
        state.z = project_tree_consistency(state.x + state.nu, shape)
        state.w = project_nonneg_normalized(state.x + state.eta, shape)
        state.x = ((state.y + noisy - state.mu) + (state.z - state.nu) + (state.w - state.eta)) / 3

        primal_y = state.x - noisy - state.y
        primal_z = state.x - state.z
        primal_w = state.x - state.w
        state.mu = state.mu + primal_y
        state.nu = state.nu + primal_z
        state.eta = state.eta + primal_w

        objective.append(_objective(state.w, noisy))
        residual = max(np.abs(primal_y).max(), np.abs(primal_z).max(), np.abs(primal_w).max())
        if residual < options.tol:
            converged = True
            break

    if not converged:
        logger.warning("HH-ADMM не сошелся за %s итераций, невязка %.3g", options.max_iters, residual)
    constraint_residual = None
    if A is not None:
        constraint_residual = float(np.abs(A @ state.w).max())
        logger.debug("HH-ADMM: |A w| = %.3g", constraint_residual)

    leaves = state.w[-shape.leaves:][: shape.d]
    return AdmmResult(
        histogram=normalize(Histogram(values=np.clip(leaves, 0.0, None))),
        nodes=state.w,
        iterations=iteration,
        converged=converged,
        residual=float(residual),
        constraint_residual=constraint_residual,
        objective=objective,
    )
