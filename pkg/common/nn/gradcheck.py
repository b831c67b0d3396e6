"""Проверка аналитических градиентов центральными разностями."""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)

LossFn = Callable[[npt.NDArray[np.float64]], tuple[float, npt.NDArray[np.float64]]]


@dataclass(frozen=True, slots=True)
class GradCheckReport:
    max_rel_error: float
    max_abs_error: float
    worst_index: int
    checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def grad_check(
    loss_fn: LossFn,
    point: npt.NDArray[np.float64],
    tolerance: float = 1e-4,
    step: float = 1e-5,
    indices: Sequence[int] | None = None,
) -> GradCheckReport:
    """
    Сравнивает градиент loss_fn с численным.

    Относительная ошибка по компоненте:
        |a - n| / max(|a|, |n|, 1e-6 * max(max|a|, max|n|))
    Нижняя граница знаменателя отсекает шум округления на почти нулевых компонентах;
    малые ненулевые компоненты сравниваются по собственной величине.

    Args:
        loss_fn: x -> (loss, grad)
        indices: подмножество проверяемых компонент (по умолчанию все)
    """
    x = np.array(point, dtype=np.float64)
    _, analytic = loss_fn(x.copy())
    analytic = np.asarray(analytic, dtype=np.float64)
    chosen = np.arange(x.size) if indices is None else np.asarray(indices, dtype=np.int64)

    numeric = np.zeros(chosen.size)
    for n, idx in enumerate(chosen):
        plus, minus = x.copy(), x.copy()
        plus[idx] += step
        minus[idx] -= step
        numeric[n] = (loss_fn(plus)[0] - loss_fn(minus)[0]) / (2.0 * step)

    picked = analytic[chosen]
    scale = max(float(np.max(np.abs(picked), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)), 1e-12)
    denom = np.maximum(np.maximum(np.abs(picked), np.abs(numeric)), 1e-6 * scale)
    diff = np.abs(picked - numeric)
    rel = diff / denom
    worst = int(np.argmax(rel)) if rel.size else 0
    report = GradCheckReport(
        max_rel_error=float(rel[worst]) if rel.size else 0.0,
        max_abs_error=float(np.max(diff, initial=0.0)),
        worst_index=int(chosen[worst]) if rel.size else -1,
        checked=int(chosen.size),
        tolerance=tolerance,
    )
    logger.debug(
        "Gradient check: %d components, max rel error %.3e, max abs error %.3e",
        report.checked,
        report.max_rel_error,
        report.max_abs_error,
    )
    return report
