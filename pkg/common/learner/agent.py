"""
Рекуррентная Q-сеть агента: fc1 + ReLU -> GRU -> fc2 (Q для 6 действий).

Параметры общие для всех агентов; к наблюдению добавляются one-hot
предыдущего действия и one-hot номера агента.
"""

from dataclasses import dataclass

import numpy as np

from common.env import N_ACTIONS
from common.exceptions import ContractViolation
from common.nn import (
    GruCache,
    ParamLayout,
    gru_backward,
    gru_forward,
    gru_shapes,
    gru_step_forward,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
)
from common.nn.layers import Tensor


def agent_input_dim(obs_dim: int, n_agents: int) -> int:
    return obs_dim + N_ACTIONS + n_agents


def agent_layout(input_dim: int, hidden_dim: int) -> ParamLayout:
    shapes = {
        "fc1.weight": (hidden_dim, input_dim),
        "fc1.bias": (hidden_dim,),
        **{f"gru.{name}": shape for name, shape in gru_shapes(hidden_dim, hidden_dim).items()},
        "fc2.weight": (N_ACTIONS, hidden_dim),
        "fc2.bias": (N_ACTIONS,),
    }
    return ParamLayout.from_shapes(shapes).prefixed("agent")


def init_uniform(views: dict[str, Tensor], rng: np.random.Generator) -> None:
    """Равномерная инициализация ±1/sqrt(fan_in) для каждого тензора блока."""
    fan_in: dict[str, int] = {}
    for name, view in views.items():
        layer = name.rsplit(".", 1)[0]
        if view.ndim == 2:
            fan_in[layer] = view.shape[1]
    for name, view in views.items():
        layer = name.rsplit(".", 1)[0]
        if name.startswith("gru."):
            bound = 1.0 / np.sqrt(views["gru.w_hh"].shape[1])
        else:
            bound = 1.0 / np.sqrt(fan_in[layer])
        view[...] = rng.uniform(-bound, bound, size=view.shape)


@dataclass(slots=True)
class AgentCache:
    inputs: Tensor
    pre1: Tensor
    hidden_in: Tensor
    gru_caches: list[GruCache]
    hs: Tensor


class AgentNet:
    """Работает на view параметров; своих копий весов не держит"""

    def __init__(self, views: dict[str, Tensor]):
        self.p = views
        self.hidden_dim = views["fc1.weight"].shape[0]
        self.input_dim = views["fc1.weight"].shape[1]

    def _gru(self) -> dict[str, Tensor]:
        return {key[len("gru."):]: value for key, value in self.p.items() if key.startswith("gru.")}

    def init_hidden(self, batch: int) -> Tensor:
        return np.zeros((batch, self.hidden_dim))

    def step(self, inputs: Tensor, hidden: Tensor) -> tuple[Tensor, Tensor]:
        """Один шаг: inputs (N, D), hidden (N, H) -> (Q (N, 6), hidden')"""
        x = relu_forward(linear_forward(self.p["fc1.weight"], self.p["fc1.bias"], inputs))
        hidden, _ = gru_step_forward(self._gru(), x, hidden)
        return linear_forward(self.p["fc2.weight"], self.p["fc2.bias"], hidden), hidden

    def forward(self, inputs: Tensor, hidden: Tensor | None = None) -> tuple[Tensor, AgentCache]:
        """
        Прогон по всей последовательности.

        Args:
            inputs: (T, N, D)
            hidden: (N, H), по умолчанию нули

        Returns:
            Q: (T, N, 6) и кэш для backward
        """
        if hidden is None:
            hidden = self.init_hidden(inputs.shape[1])
        pre1 = linear_forward(self.p["fc1.weight"], self.p["fc1.bias"], inputs)
        x = relu_forward(pre1)
        hs, gru_caches = gru_forward(self._gru(), x, hidden)
        qs = linear_forward(self.p["fc2.weight"], self.p["fc2.bias"], hs)
        return qs, AgentCache(inputs=inputs, pre1=pre1, hidden_in=hidden, gru_caches=gru_caches, hs=hs)

    def backward(self, dqs: Tensor, cache: AgentCache) -> dict[str, Tensor]:
        """Градиенты по параметрам блока (ключи без префикса)."""
        dhs, dw2, db2 = linear_backward(self.p["fc2.weight"], cache.hs, dqs)
        dxs, _, gru_grads = gru_backward(self._gru(), dhs, cache.gru_caches)
        dpre1 = relu_backward(cache.pre1, dxs)
        _, dw1, db1 = linear_backward(self.p["fc1.weight"], cache.inputs, dpre1)
        grads = {"fc1.weight": dw1, "fc1.bias": db1, "fc2.weight": dw2, "fc2.bias": db2}
        grads.update({f"gru.{key}": value for key, value in gru_grads.items()})
        return grads


def act(
    net: AgentNet,
    hidden: Tensor,
    agent_input: Tensor,
    mask: Tensor,
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[int, Tensor]:
    """
    ε-greedy выбор действия одного агента по допустимому множеству.

    При ε = 0 генератор не используется. Ничьи argmax решаются в пользу
    меньшего индекса действия.
    """
    actions, hidden = act_many(net, hidden[None, :], agent_input[None, :], mask[None, :], epsilon, rng)
    return actions[0], hidden[0]


def act_many(
    net: AgentNet,
    hidden: Tensor,
    agent_inputs: Tensor,
    masks: Tensor,
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[list[int], Tensor]:
    """act для всех агентов сразу: hidden (I, H), agent_inputs (I, D), masks (I, 6)"""
    feasible = masks > 0
    if not np.all(feasible.any(axis=1)):
        raise ContractViolation("empty feasibility mask")
    qs, hidden = net.step(agent_inputs, hidden)
    greedy = np.argmax(np.where(feasible, qs, -np.inf), axis=1)

    actions = []
    for i in range(masks.shape[0]):
        if epsilon > 0 and rng.random() < epsilon:
            actions.append(int(rng.choice(np.flatnonzero(feasible[i]))))
        else:
            actions.append(int(greedy[i]))
    return actions, hidden
