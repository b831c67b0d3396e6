"""
Слои с ручным обратным проходом (float64).

Каждая пара *_forward / *_backward считает точные градиенты; рекуррентная
ячейка разворачивается по всему эпизоду (BPTT).
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

Tensor = npt.NDArray[np.float64]


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(f"shape mismatch: {message}")


# ---- линейный слой ----

def linear_forward(weight: Tensor, bias: Tensor, x: Tensor) -> Tensor:
    """y = x W^T + b; x: (N, in), W: (out, in), b: (out,)"""
    _check(x.shape[-1] == weight.shape[1], f"input {x.shape} vs weight {weight.shape}")
    _check(bias.shape == (weight.shape[0],), f"bias {bias.shape} vs weight {weight.shape}")
    return x @ weight.T + bias


def linear_backward(weight: Tensor, x: Tensor, dy: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Возвращает (dx, dW, db)."""
    _check(dy.shape[-1] == weight.shape[0], f"upstream {dy.shape} vs weight {weight.shape}")
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ weight, dy2.T @ x2, dy2.sum(axis=0)


# ---- активации ----

def sigmoid(x: Tensor) -> Tensor:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def relu_forward(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


def relu_backward(x: Tensor, dy: Tensor) -> Tensor:
    return dy * (x > 0)


def elu_forward(x: Tensor) -> Tensor:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_backward(x: Tensor, dy: Tensor) -> Tensor:
    return dy * np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


# ---- GRU ----
# Параметры: w_ih (3H, D), w_hh (3H, H), b_ih (3H,), b_hh (3H,), порядок гейтов (r, z, n).
# r = σ(..), z = σ(..), n = tanh(gi_n + r * gh_n), h' = (1 - z) * n + z * h

GRU_KEYS = ("w_ih", "w_hh", "b_ih", "b_hh")


def gru_shapes(input_dim: int, hidden_dim: int) -> dict[str, tuple[int, ...]]:
    h3 = 3 * hidden_dim
    return {"w_ih": (h3, input_dim), "w_hh": (h3, hidden_dim), "b_ih": (h3,), "b_hh": (h3,)}


@dataclass(slots=True)
class GruCache:
    x: Tensor
    h: Tensor
    r: Tensor
    z: Tensor
    n: Tensor
    gh_n: Tensor


def gru_step_forward(params: dict[str, Tensor], x: Tensor, h: Tensor) -> tuple[Tensor, GruCache]:
    hidden = h.shape[-1]
    _check(params["w_hh"].shape == (3 * hidden, hidden), f"hidden {h.shape} vs w_hh {params['w_hh'].shape}")
    gi = linear_forward(params["w_ih"], params["b_ih"], x)
    gh = linear_forward(params["w_hh"], params["b_hh"], h)
    r = sigmoid(gi[:, :hidden] + gh[:, :hidden])
    z = sigmoid(gi[:, hidden:2 * hidden] + gh[:, hidden:2 * hidden])
    gh_n = gh[:, 2 * hidden:]
    n = np.tanh(gi[:, 2 * hidden:] + r * gh_n)
    h_next = (1.0 - z) * n + z * h
    return h_next, GruCache(x=x, h=h, r=r, z=z, n=n, gh_n=gh_n)


def gru_step_backward(
    params: dict[str, Tensor], dh_next: Tensor, cache: GruCache
) -> tuple[Tensor, Tensor, dict[str, Tensor]]:
    """Возвращает (dx, dh_prev, градиенты параметров)."""
    r, z, n = cache.r, cache.z, cache.n
    dn = dh_next * (1.0 - z)
    dz = dh_next * (cache.h - n)
    dh = dh_next * z

    da_n = dn * (1.0 - n * n)
    dr = da_n * cache.gh_n
    da_r = dr * r * (1.0 - r)
    da_z = dz * z * (1.0 - z)

    dgi = np.concatenate([da_r, da_z, da_n], axis=1)
    dgh = np.concatenate([da_r, da_z, da_n * r], axis=1)

    dx, dw_ih, db_ih = linear_backward(params["w_ih"], cache.x, dgi)
    dh_from_gates, dw_hh, db_hh = linear_backward(params["w_hh"], cache.h, dgh)
    grads = {"w_ih": dw_ih, "w_hh": dw_hh, "b_ih": db_ih, "b_hh": db_hh}
    return dx, dh + dh_from_gates, grads


def gru_forward(params: dict[str, Tensor], xs: Tensor, h0: Tensor) -> tuple[Tensor, list[GruCache]]:
    """
    Прямой проход по последовательности.

    Args:
        xs: (T, N, D)
        h0: (N, H)

    Returns:
        hs: (T, N, H) и кэши шагов; при T = 0 hs пустой
    """
    steps, caches = [], []
    h = h0
    for t in range(xs.shape[0]):
        h, cache = gru_step_forward(params, xs[t], h)
        steps.append(h)
        caches.append(cache)
    if not steps:
        return np.zeros((0,) + h0.shape), caches
    return np.stack(steps), caches


def gru_backward(
    params: dict[str, Tensor], dhs: Tensor, caches: list[GruCache]
) -> tuple[Tensor, Tensor, dict[str, Tensor]]:
    """
    BPTT через всю последовательность.

    Args:
        dhs: (T, N, H), градиенты по выходам каждого шага

    Returns:
        (dxs (T, N, D), dh0 (N, H), градиенты параметров)
    """
    grads = {key: np.zeros_like(params[key]) for key in GRU_KEYS}
    if not caches:
        raise ValueError("empty sequence")

    dxs = np.zeros((len(caches),) + caches[0].x.shape)
    dh_carry = np.zeros_like(caches[0].h)
    for t in range(len(caches) - 1, -1, -1):
        dx, dh_carry, step_grads = gru_step_backward(params, dhs[t] + dh_carry, caches[t])
        dxs[t] = dx
        for key in GRU_KEYS:
            grads[key] += step_grads[key]
    return dxs, dh_carry, grads
