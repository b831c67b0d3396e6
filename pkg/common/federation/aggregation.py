"""Федеративное усреднение параметров."""

from collections.abc import Sequence

import numpy as np

from common.exceptions import LayoutMismatchError
from common.nn import ParamVector, check_same_layout


def aggregate(params: Sequence[ParamVector]) -> ParamVector:
    """
    Поэлементное среднее локальных параметров.

    Raises:
        LayoutMismatchError: пустой список или разные раскладки
    """
    if not params:
        raise LayoutMismatchError("aggregate: no parameter vectors")
    layout = params[0].layout
    for vector in params[1:]:
        check_same_layout(layout, vector.layout)
    # Сортировка по координате делает результат независимым от порядка входов,
    # а сдвиг на минимум даёт точное значение для одинаковых входов
    stacked = np.sort(np.stack([vector.values for vector in params]), axis=0)
    base = stacked[0]
    return ParamVector(layout, base + (stacked - base).mean(axis=0))
