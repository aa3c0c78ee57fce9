"""
Механизмы General Wave и Square Wave.

Непрерывный SW работает на входе [0, 1] с выходом [-b, 1+b],
дискретный SW на индексах [0, d) с выходом [0, d + 2b).
"""

import math
from typing import List, Optional, Union

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PPoly
from scipy.optimize import brentq

from app.core.exceptions import ConfigError, DomainError
from app.core.logging import logger
from app.schemas.privacy import DiscreteSwParams, PrivacyParams, SwParams
from app.schemas.wave import WaveKind, WaveShape
from app.utils.rng import Stream, make_rng

TRAPEZOID_RATIOS = (0.2, 0.4, 0.6, 0.8)


def _epsilon(params: Union[PrivacyParams, float]) -> float:
    return params.epsilon if isinstance(params, PrivacyParams) else float(params)


def optimal_b(params: Union[PrivacyParams, float]) -> float:
    """
    Полуширина плато, максимизирующая верхнюю оценку взаимной информации:
    b = (eps e^eps - e^eps + 1) / (2 e^eps (e^eps - 1 - eps)).

    При eps = 0 возвращается предел 1/2.
    """
    epsilon = _epsilon(params)
    if epsilon < 0:
        raise ConfigError("eps должен быть неотрицательным")
    if epsilon < 1e-6:
        return 0.5
    exp_eps = math.exp(epsilon)
    numerator = epsilon * exp_eps - math.expm1(epsilon)
    denominator = 2 * exp_eps * (math.expm1(epsilon) - epsilon)
    return numerator / denominator


def discrete_b(params: Union[PrivacyParams, float], d: int) -> int:
    """Целочисленная полуширина дискретного SW: floor(optimal_b * d)"""
    if d < 1:
        raise ConfigError("d должен быть не меньше 1")
    return int(math.floor(optimal_b(params) * d))


def mutual_info_bound(b: float, params: Union[PrivacyParams, float]) -> float:
    """log((2b+1)/(2b e^eps + 1)) + 2b eps e^eps / (2b e^eps + 1)"""
    if b <= 0:
        raise ConfigError("b должен быть положительным")
    epsilon = _epsilon(params)
    exp_eps = math.exp(epsilon)
    return math.log((2 * b + 1) / (2 * b * exp_eps + 1)) + 2 * b * epsilon * exp_eps / (2 * b * exp_eps + 1)


def sw_params(epsilon: float, b: Optional[float] = None) -> SwParams:
    """SwParams с оптимальным b, если b не задан"""
    return SwParams(epsilon=epsilon, b=optimal_b(epsilon) if b is None else b)


def _check_unit(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size and (np.any(values < 0) or np.any(values > 1) or np.any(np.isnan(values))):
        raise DomainError("Входные значения должны лежать в [0, 1]")
    return values


# --- непрерывный Square Wave ---


def sw_perturb_batch(values, params: SwParams, seed: int) -> np.ndarray:
    """
    Square Wave для всех пользователей.

    С вероятностью 2bp отчет равномерен на [v-b, v+b], иначе равномерен
    на дополнении внутри [-b, 1+b] (левый и правый отрезки пропорционально длине).

    Args:
        values: Значения из [0, 1]
        params: Параметры SW
        seed: Зерно

    Returns:
        np.ndarray: Отчеты из [-b, 1+b]
    """
    values = _check_unit(values)
    rng = make_rng(seed, Stream.PERTURB)
    n = values.shape[0]
    high = rng.random(n) < 2 * params.b * params.p
    u = rng.random(n)
    near = values - params.b + 2 * params.b * u
    # дополнение имеет длину 1: [-b, v-b) и [v+b, 1+b)
    far = u - params.b + 2 * params.b * (u >= values)
    return np.clip(np.where(high, near, far), params.lo, params.hi)


def sw_perturb(v: float, params: SwParams, seed: int) -> float:
    """Square Wave отчет одного пользователя"""
    return float(sw_perturb_batch(np.array([v]), params, seed)[0])


# --- дискретный Square Wave ---


def sw_perturb_discrete_batch(values, params: DiscreteSwParams, seed: int) -> np.ndarray:
    """
    Дискретный SW: индекс v сдвигается в окно [v, v + 2b] выходного домена.

    Returns:
        np.ndarray[int64]: индексы из [0, d + 2b)
    """
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= params.d):
        raise DomainError(f"Индекс вне домена [0, {params.d})")
    rng = make_rng(seed, Stream.PERTURB)
    n = values.shape[0]
    window = 2 * params.b + 1
    high = rng.random(n) < window * params.p
    offset = rng.integers(0, window, size=n)
    if params.d > 1:
        other = rng.integers(0, params.d - 1, size=n)
        far = np.where(other < values, other, other + window)
    else:
        far = values + offset
    return np.where(high, values + offset, far)


def sw_perturb_discrete(v: int, params: DiscreteSwParams, seed: int) -> int:
    """Дискретный SW отчет одного пользователя"""
    return int(sw_perturb_discrete_batch(np.array([v]), params, seed)[0])


# --- General Wave ---


def wave_shape(
    kind: WaveKind,
    epsilon: float,
    b: Optional[float] = None,
    ratio: Optional[float] = None,
    q: Optional[float] = None,
    equal_area: bool = False,
) -> WaveShape:
    """
    Строит волну заданной формы.

    Без q пик берется равным e^eps q, а q находится из условия нормировки
    q (1 + 2b) + (e^eps - 1) q * area(T) = 1. С заданным q из нормировки
    находится пик; если он превышает e^eps q, форма недопустима.

    Args:
        kind: square, trapezoid или triangle
        epsilon: Бюджет приватности
        b: Полуширина волны (по умолчанию optimal_b)
        ratio: Отношение сторон трапеции
        q: Нижний уровень плотности
        equal_area: b задает полуширину квадрата той же площади избытка;
            полуширина носителя тогда 2b / (1 + ratio)

    Returns:
        WaveShape

    Raises:
        ConfigError: недопустимая форма при данных (b, eps)
    """
    if kind == "square":
        ratio = 1.0
    elif kind == "triangle":
        ratio = 0.0
    elif ratio is None or not 0 < ratio < 1:
        raise ConfigError("Для трапеции нужен ratio из (0, 1)")
    b = optimal_b(epsilon) if b is None else b
    if not 0 < b <= 0.5:
        raise ConfigError("b для волны должен лежать в (0, 1/2]")
    if equal_area:
        b = 2 * b / (1 + ratio)
    exp_eps = math.exp(epsilon)
    area = WaveShape.profile_area(b, ratio)

    if q is None:
        q = brentq(
            lambda level: level * (1 + 2 * b) + (exp_eps - 1) * level * area - 1.0,
            0.0,
            1.0 / (1 + 2 * b),
            xtol=1e-15,
            rtol=1e-15,
        )
        peak = exp_eps * q
    else:
        peak = q + (1.0 - q * (1 + 2 * b)) / area
        if peak > exp_eps * q * (1 + 1e-12) or peak < q:
            raise ConfigError(
                f"Форма {kind} недопустима при b={b}, eps={epsilon}: пик {peak:.6g} вне [q, e^eps q]"
            )
    try:
        return WaveShape(kind=kind, epsilon=epsilon, b=b, ratio=ratio, q=q, peak=min(peak, exp_eps * q))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def gw_perturb_batch(values, shape: WaveShape, seed: int) -> np.ndarray:
    """
    General Wave для всех пользователей.

    Плотность отчета q на [-b, 1+b] плюс избыток (peak - q) T(v' - v).
    Избыток трапеции выбирается как v + U1 + U2 с U1 ~ U[-b(1+r)/2, b(1+r)/2],
    U2 ~ U[-b(1-r)/2, b(1-r)/2].
    """
    values = _check_unit(values)
    rng = make_rng(seed, Stream.PERTURB)
    n = values.shape[0]
    excess = rng.random(n) < shape.excess_mass
    background = shape.lo + (shape.hi - shape.lo) * rng.random(n)
    wide = shape.b * (1 + shape.ratio) / 2
    narrow = shape.b * (1 - shape.ratio) / 2
    bump = values + wide * (2 * rng.random(n) - 1) + narrow * (2 * rng.random(n) - 1)
    return np.clip(np.where(excess, bump, background), shape.lo, shape.hi)


def gw_perturb(v: float, shape: WaveShape, seed: int) -> float:
    """General Wave отчет одного пользователя"""
    return float(gw_perturb_batch(np.array([v]), shape, seed)[0])


# --- аналитика выходного распределения ---


def excess_ppoly(shape: WaveShape, reach: float = 2.0) -> PPoly:
    """
    Кусочно-линейный избыток W(z) - q на [-reach, reach] как PPoly.
    """
    height = shape.peak - shape.q
    b = shape.b
    top = shape.ratio * b
    pieces = [(-reach, 0.0, 0.0)]
    if top < b:
        slope = height / (b - top)
        pieces.append((-b, slope, 0.0))
        if top > 0:
            pieces.append((-top, 0.0, height))
        pieces.append((top, -slope, height))
    else:
        pieces.append((-b, 0.0, height))
    pieces.append((b, 0.0, 0.0))
    breaks = np.array([start for start, _, _ in pieces] + [reach])
    coefficients = np.array([[slope for _, slope, _ in pieces], [value for _, _, value in pieces]])
    return PPoly(coefficients, breaks)


def output_cdf(shape: WaveShape, v: float, t) -> np.ndarray:
    """CDF отчета механизма при входе v, в точках t из [-b, 1+b]"""
    t = np.asarray(t, dtype=np.float64)
    excess_cdf = excess_ppoly(shape).antiderivative()
    return shape.q * (t - shape.lo) + excess_cdf(t - v)


def output_wasserstein(shape: WaveShape, v1: float, v2: float) -> float:
    """W1 между распределениями отчетов для входов v1 и v2 (квадратура разности CDF)"""
    lo, hi = shape.lo, shape.hi
    # равномерная часть q одинакова для обоих входов и сокращается
    excess_cdf = excess_ppoly(shape).antiderivative()
    offsets = (-shape.b, -shape.ratio * shape.b, shape.ratio * shape.b, shape.b)
    points = sorted({v + s for v in (v1, v2) for s in offsets})
    distance, _ = quad(
        lambda t: abs(float(excess_cdf(t - v1)) - float(excess_cdf(t - v2))),
        lo,
        hi,
        points=[p for p in points if lo < p < hi],
        limit=200,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return distance


def separation_distance(shape: WaveShape, delta: float) -> float:
    """Delta (1 - (2b + 1) q)"""
    return abs(delta) * (1 - (2 * shape.b + 1) * shape.q)


def shape_catalog(epsilon: float, b: Optional[float] = None, equal_area: bool = False) -> List[WaveShape]:
    """Квадрат, трапеции и треугольник при одинаковых (b, eps)"""
    shapes = [wave_shape("square", epsilon, b, equal_area=equal_area)]
    shapes += [
        wave_shape("trapezoid", epsilon, b, ratio=r, equal_area=equal_area) for r in TRAPEZOID_RATIOS
    ]
    shapes.append(wave_shape("triangle", epsilon, b, equal_area=equal_area))
    logger.debug("Построено %s форм волны при eps=%s", len(shapes), epsilon)
    return shapes
