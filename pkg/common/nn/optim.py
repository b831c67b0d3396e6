"""Adam с коррекцией смещения и клиппинг нормы градиента."""

from dataclasses import dataclass, field
try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

import numpy as np
import numpy.typing as npt

from common.exceptions import LayoutMismatchError
from common.nn.params import ParamVector


@dataclass(slots=True)
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: npt.NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    v: npt.NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def zeros(cls, size: int, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> Self:
        return cls(learning_rate, beta1, beta2, eps, 0, np.zeros(size), np.zeros(size))


def clip_grad_norm(grads: npt.NDArray[np.float64], max_norm: float | None) -> tuple[npt.NDArray[np.float64], float]:
    """Возвращает (градиент, норма до клиппинга)."""
    norm = float(np.linalg.norm(grads))
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return grads, norm
    return grads * (max_norm / norm), norm


def adam_update(params: ParamVector, grads: npt.NDArray[np.float64], state: AdamState) -> None:
    """Шаг Adam на месте: меняет params.values и state."""
    if grads.shape != params.values.shape or state.m.shape != grads.shape:
        raise LayoutMismatchError(
            f"adam: grads {grads.shape}, params {params.values.shape}, moments {state.m.shape}"
        )
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    params.values -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
