"""
Монотонный смешиватель QMIX.

Гиперсети по глобальному состоянию s выдают веса смешивания:
    W1 = |w1_out(relu(w1_hidden(s)))|    (I, E)
    b1 = b1(s)                            (E,)
    W2 = |w2_out(relu(w2_hidden(s)))|    (E,)
    b2 = b2_out(relu(b2_hidden(s)))       скаляр
    Q_tot = W2 . elu(q W1 + b1) + b2
"""

from dataclasses import dataclass

import numpy as np

from common.nn import (
    ParamLayout,
    elu_backward,
    elu_forward,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
)
from common.nn.layers import Tensor


def mixer_layout(n_agents: int, state_dim: int, embed_dim: int, hypernet_dim: int) -> ParamLayout:
    shapes: dict[str, tuple[int, ...]] = {}
    for name, (fan_in, fan_out) in {
        "w1_hidden": (state_dim, hypernet_dim),
        "w1_out": (hypernet_dim, n_agents * embed_dim),
        "b1": (state_dim, embed_dim),
        "w2_hidden": (state_dim, hypernet_dim),
        "w2_out": (hypernet_dim, embed_dim),
        "b2_hidden": (state_dim, embed_dim),
        "b2_out": (embed_dim, 1),
    }.items():
        shapes[f"{name}.weight"] = (fan_out, fan_in)
        shapes[f"{name}.bias"] = (fan_out,)
    return ParamLayout.from_shapes(shapes).prefixed("mixer")


@dataclass(slots=True)
class MixerCache:
    qs: Tensor
    states: Tensor
    pre_w1: Tensor
    h_w1: Tensor
    raw_w1: Tensor
    w1: Tensor
    pre_w2: Tensor
    h_w2: Tensor
    raw_w2: Tensor
    w2: Tensor
    pre_b2: Tensor
    h_b2: Tensor
    pre_hidden: Tensor
    hidden: Tensor


class MixerNet:
    """Работает на view параметров блока mixer"""

    def __init__(self, views: dict[str, Tensor], n_agents: int):
        self.p = views
        self.n_agents = n_agents
        self.embed_dim = views["b1.weight"].shape[0]

    def _lin(self, name: str, x: Tensor) -> Tensor:
        return linear_forward(self.p[f"{name}.weight"], self.p[f"{name}.bias"], x)

    def forward(self, qs: Tensor, states: Tensor) -> tuple[Tensor, MixerCache]:
        """
        Args:
            qs: (M, I) Q-значения выбранных действий
            states: (M, S)

        Returns:
            Q_tot: (M,) и кэш
        """
        m = qs.shape[0]
        pre_w1 = self._lin("w1_hidden", states)
        h_w1 = relu_forward(pre_w1)
        raw_w1 = self._lin("w1_out", h_w1).reshape(m, self.n_agents, self.embed_dim)
        w1 = np.abs(raw_w1)
        b1 = self._lin("b1", states)

        pre_w2 = self._lin("w2_hidden", states)
        h_w2 = relu_forward(pre_w2)
        raw_w2 = self._lin("w2_out", h_w2)
        w2 = np.abs(raw_w2)

        pre_b2 = self._lin("b2_hidden", states)
        h_b2 = relu_forward(pre_b2)
        b2 = self._lin("b2_out", h_b2)[:, 0]

        pre_hidden = np.einsum("mi,mie->me", qs, w1) + b1
        hidden = elu_forward(pre_hidden)
        q_tot = np.sum(hidden * w2, axis=1) + b2
        cache = MixerCache(
            qs=qs, states=states,
            pre_w1=pre_w1, h_w1=h_w1, raw_w1=raw_w1, w1=w1,
            pre_w2=pre_w2, h_w2=h_w2, raw_w2=raw_w2, w2=w2,
            pre_b2=pre_b2, h_b2=h_b2,
            pre_hidden=pre_hidden, hidden=hidden,
        )
        return q_tot, cache

    def mix(self, qs: Tensor, states: Tensor) -> Tensor:
        return self.forward(qs, states)[0]

    def backward(self, dq_tot: Tensor, cache: MixerCache) -> tuple[Tensor, dict[str, Tensor]]:
        """Возвращает (dQ по агентам (M, I), градиенты параметров блока)."""
        grads: dict[str, Tensor] = {}
        m = dq_tot.shape[0]

        def back(name: str, x: Tensor, dy: Tensor) -> Tensor:
            dx, grads[f"{name}.weight"], grads[f"{name}.bias"] = linear_backward(self.p[f"{name}.weight"], x, dy)
            return dx

        dq = dq_tot[:, None]
        dw2 = dq * cache.hidden
        dhidden = dq * cache.w2
        db2 = dq

        dpre_hidden = elu_backward(cache.pre_hidden, dhidden)
        dqs = np.einsum("me,mie->mi", dpre_hidden, cache.w1)
        dw1 = cache.qs[:, :, None] * dpre_hidden[:, None, :]
        db1 = dpre_hidden

        dh_b2 = back("b2_out", cache.h_b2, db2)
        back("b2_hidden", cache.states, relu_backward(cache.pre_b2, dh_b2))

        dh_w2 = back("w2_out", cache.h_w2, dw2 * np.sign(cache.raw_w2))
        back("w2_hidden", cache.states, relu_backward(cache.pre_w2, dh_w2))

        back("b1", cache.states, db1)

        dh_w1 = back("w1_out", cache.h_w1, (dw1 * np.sign(cache.raw_w1)).reshape(m, -1))
        back("w1_hidden", cache.states, relu_backward(cache.pre_w1, dh_w1))
        return dqs, grads
