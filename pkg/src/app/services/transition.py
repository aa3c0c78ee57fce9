"""
Матрицы переходов для EM реконструкции.

M[j][i] = (1/|B_i|) * интеграл по v из B_i вероятности отчета в B~_j,
вход считается равномерным внутри бакета.
"""

from typing import Optional

import numpy as np

from app.core.logging import logger
from app.schemas.histogram import BucketSpec
from app.schemas.privacy import DiscreteSwParams, SwParams
from app.schemas.wave import TransitionMatrix, WaveShape
from app.services.wave import excess_ppoly, wave_shape


def build_wave_transition_matrix(shape: WaveShape, d: int, d_out: Optional[int] = None) -> TransitionMatrix:
    """
    Матрица переходов для произвольной формы волны в замкнутом виде.

    Избыток e(z) = W(z) - q кусочно-линеен, поэтому двойной интеграл
    по входному и выходному бакету выражается через вторую первообразную E2:
    E2(r - a0) - E2(r - a1) - E2(l - a0) + E2(l - a1).

    Args:
        shape: Форма волны
        d: Число входных бакетов на [0, 1]
        d_out: Число выходных бакетов на [-b, 1+b] (по умолчанию d)

    Returns:
        TransitionMatrix
    """
    d_out = d_out or d
    input_spec = BucketSpec(domain_lo=0.0, domain_hi=1.0, d=d)
    output_spec = BucketSpec(domain_lo=shape.lo, domain_hi=shape.hi, d=d_out)
    inner = input_spec.edges()
    outer = output_spec.edges()
    second = excess_ppoly(shape).antiderivative(2)

    a0, a1 = inner[:-1][None, :], inner[1:][None, :]
    left, right = outer[:-1][:, None], outer[1:][:, None]
    excess = second(right - a0) - second(right - a1) - second(left - a0) + second(left - a1)
    matrix = shape.q * (right - left) + excess / (a1 - a0)
    matrix = np.clip(matrix, 0.0, None)
    # погрешность округления порядка 1e-15 на столбец
    matrix = matrix / matrix.sum(axis=0, keepdims=True)
    logger.debug("Матрица переходов %sx%s для формы %s", d_out, d, shape.kind)
    return TransitionMatrix(matrix=matrix, input_spec=input_spec, output_spec=output_spec)


def build_transition_matrix(params: SwParams, d: int, d_out: Optional[int] = None) -> TransitionMatrix:
    """
    Матрица переходов Square Wave.

    M[j][i] = q |B~_j| + (p - q) (1/|B_i|) интеграл overlap(v, B~_j) dv.
    """
    d_out = d_out or d
    if params.b == 0:
        # SW вырождается в равномерный шум на [0, 1]
        spec = BucketSpec(d=d_out)
        matrix = np.repeat(np.diff(spec.edges())[:, None], d, axis=1)
        return TransitionMatrix(matrix=matrix, input_spec=BucketSpec(d=d), output_spec=spec)
    return build_wave_transition_matrix(wave_shape("square", params.epsilon, params.b), d, d_out)


def build_discrete_transition_matrix(params: DiscreteSwParams) -> TransitionMatrix:
    """Точная матрица дискретного SW: p на окне [i, i + 2b], иначе q"""
    rows = np.arange(params.d_out)[:, None]
    cols = np.arange(params.d)[None, :]
    window = (rows >= cols) & (rows <= cols + 2 * params.b)
    matrix = np.where(window, params.p, params.q)
    return TransitionMatrix(matrix=matrix)
