"""
QMIX / IQL ученик: сети агента и смешивателя, target-копии, Adam.

Все обучаемые параметры лежат в одном ParamVector: блок agent.* и,
в режиме qmix, блок mixer.*. В режиме iql блока mixer нет.
"""

import logging
from typing import Any

import numpy as np

from common.env import N_ACTIONS
from common.exceptions import LayoutMismatchError
from common.learner.agent import AgentNet, act_many, agent_input_dim, agent_layout, init_uniform
from common.learner.buffer import EpisodeBatch, EpisodeBuffer
from common.learner.mixer import MixerNet, mixer_layout
from common.nn import AdamState, ParamVector, adam_update, check_same_layout, clip_grad_norm, flatten_grads
from config import LearnerConfig

logger = logging.getLogger(__name__)

# Нет предыдущего действия (первый шаг эпизода)
NO_ACTION = -1


class QLearner:
    """
    Ученик одного федеративного участника.

    Использование:
        learner = QLearner(cfg, n_agents=3, obs_dim=..., state_dim=..., rng=rng)
        hidden = learner.init_hidden()
        actions, hidden = learner.select_actions(hidden, observations, masks, prev_actions, eps, rng)
        loss = learner.train_step(buffer, rng)
    """

    def __init__(self, cfg: LearnerConfig, n_agents: int, obs_dim: int, state_dim: int, rng: np.random.Generator):
        self.cfg = cfg
        self.n_agents = n_agents
        self.obs_dim = obs_dim
        self.state_dim = state_dim
        self.input_dim = agent_input_dim(obs_dim, n_agents)

        layout = agent_layout(self.input_dim, cfg.hidden_dim)
        if cfg.mode == "qmix":
            layout = layout.concat(mixer_layout(n_agents, state_dim, cfg.embed_dim, cfg.hypernet_dim))
        self.layout = layout

        self.params = ParamVector(layout)
        init_uniform(self.params.subset("agent"), rng)
        if cfg.mode == "qmix":
            init_uniform(self.params.subset("mixer"), rng)
        self.target = self.params.copy()

        self.agent, self.mixer = self._nets(self.params)
        self.target_agent, self.target_mixer = self._nets(self.target)

        self.adam = AdamState.zeros(
            layout.size, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
        )
        self.train_calls = 0
        self.env_steps = 0

    def _nets(self, vector: ParamVector) -> tuple[AgentNet, MixerNet | None]:
        agent = AgentNet(vector.subset("agent"))
        mixer = MixerNet(vector.subset("mixer"), self.n_agents) if self.cfg.mode == "qmix" else None
        return agent, mixer

    @property
    def mode(self) -> str:
        return self.cfg.mode

    def fingerprint(self) -> dict[str, Any]:
        """Описание архитектуры для проверки совместимости чекпоинтов."""
        return {
            "mode": self.cfg.mode,
            "n_agents": self.n_agents,
            "obs_dim": self.obs_dim,
            "state_dim": self.state_dim,
            "hidden_dim": self.cfg.hidden_dim,
            "embed_dim": self.cfg.embed_dim if self.cfg.mode == "qmix" else None,
            "hypernet_dim": self.cfg.hypernet_dim if self.cfg.mode == "qmix" else None,
            "size": self.layout.size,
        }

    # ---- действия ----

    def epsilon(self) -> float:
        """Линейное затухание ε по числу шагов среды."""
        cfg = self.cfg
        frac = min(1.0, self.env_steps / cfg.epsilon_decay_steps)
        return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)

    def init_hidden(self) -> np.ndarray:
        return self.agent.init_hidden(self.n_agents)

    def agent_inputs(self, observations: np.ndarray, prev_actions: np.ndarray) -> np.ndarray:
        """(I, O) наблюдения + one-hot предыдущих действий + one-hot id -> (I, D)"""
        prev = np.zeros((self.n_agents, N_ACTIONS))
        for i, a in enumerate(prev_actions):
            if a != NO_ACTION:
                prev[i, int(a)] = 1.0
        return np.concatenate([np.asarray(observations), prev, np.eye(self.n_agents)], axis=1)

    def select_actions(
        self,
        hidden: np.ndarray,
        observations: list[np.ndarray] | np.ndarray,
        masks: np.ndarray,
        prev_actions: np.ndarray,
        epsilon: float,
        rng: np.random.Generator,
    ) -> tuple[list[int], np.ndarray]:
        inputs = self.agent_inputs(np.stack(observations), prev_actions)
        return act_many(self.agent, hidden, inputs, np.asarray(masks), epsilon, rng)

    # ---- обучение ----

    def _batch_inputs(self, batch: EpisodeBatch) -> np.ndarray:
        """(T+1, B*I, D): наблюдение, предыдущее действие, id агента."""
        b, t1, n, _ = batch.obs.shape
        prev = np.zeros((b, t1, n, N_ACTIONS))
        if batch.max_length > 0:
            onehot = np.eye(N_ACTIONS)[batch.actions]
            prev[:, 1:] = onehot * batch.filled[:, :, None, None]
        ids = np.broadcast_to(np.eye(n), (b, t1, n, n))
        inputs = np.concatenate([batch.obs, prev, ids], axis=3)
        return inputs.transpose(1, 0, 2, 3).reshape(t1, b * n, self.input_dim)

    def loss_and_grad(self, batch: EpisodeBatch) -> tuple[float, np.ndarray]:
        """
        Сумма квадратов TD-ошибок по батчу и заполненным шагам и её градиент.

        Цель: y = r + γ (1 - terminal) * max по допустимым действиям target-сети
        на шаге t+1 (в режиме qmix через target-смешиватель).
        """
        cfg = self.cfg
        b, t = batch.size, batch.max_length
        n = self.n_agents
        inputs = self._batch_inputs(batch)

        qs, cache = self.agent.forward(inputs[:t])
        qs = qs.reshape(t, b, n, N_ACTIONS)
        actions = batch.actions.transpose(1, 0, 2)
        chosen = np.take_along_axis(qs, actions[..., None], axis=3)[..., 0]

        target_qs, _ = self.target_agent.forward(inputs)
        target_qs = target_qs.reshape(t + 1, b, n, N_ACTIONS)[1:]
        next_masks = batch.masks[:, 1:].transpose(1, 0, 2, 3) > 0
        next_max = np.where(next_masks, target_qs, -np.inf).max(axis=3)
        next_max = np.where(np.isfinite(next_max), next_max, 0.0)

        rewards = batch.rewards.T
        cont = 1.0 - batch.terminated.T.astype(np.float64)
        filled = batch.filled.T

        if self.mixer is not None:
            states = batch.states.transpose(1, 0, 2)
            s_dim = states.shape[2]
            q_tot, mix_cache = self.mixer.forward(chosen.reshape(t * b, n), states[:t].reshape(t * b, s_dim))
            target_tot = self.target_mixer.mix(next_max.reshape(t * b, n), states[1:].reshape(t * b, s_dim))
            y = rewards + cfg.gamma * cont * target_tot.reshape(t, b)
            delta = (q_tot.reshape(t, b) - y) * filled
            loss = float(np.sum(delta ** 2))
            dchosen, mixer_grads = self.mixer.backward((2.0 * delta).reshape(t * b), mix_cache)
            dchosen = dchosen.reshape(t, b, n)
        else:
            y = rewards[..., None] + cfg.gamma * cont[..., None] * next_max
            delta = (chosen - y) * filled[..., None]
            loss = float(np.sum(delta ** 2))
            dchosen = 2.0 * delta
            mixer_grads = {}

        dqs = np.zeros((t, b, n, N_ACTIONS))
        np.put_along_axis(dqs, actions[..., None], dchosen[..., None], axis=3)
        agent_grads = self.agent.backward(dqs.reshape(t, b * n, N_ACTIONS), cache)

        grads = {f"agent.{k}": v for k, v in agent_grads.items()}
        grads.update({f"mixer.{k}": v for k, v in mixer_grads.items()})
        return loss, flatten_grads(self.layout, grads)

    def train_step(self, buffer: EpisodeBuffer, rng: np.random.Generator) -> float:
        """
        Один шаг Adam на случайном батче из буфера.

        Raises:
            BufferUnderflowError: в буфере меньше batch_size эпизодов
        """
        batch = buffer.sample(self.cfg.batch_size, rng)
        loss, grads = self.loss_and_grad(batch)
        grads, norm = clip_grad_norm(grads, self.cfg.grad_norm_clip)
        adam_update(self.params, grads, self.adam)
        self.train_calls += 1
        if self.train_calls % self.cfg.target_update_period == 0:
            self.sync_target()
        logger.debug("Train step %d: loss %.4f, grad norm %.3f", self.train_calls, loss, norm)
        return loss

    def sync_target(self) -> None:
        self.target.assign(self.params)

    # ---- обмен параметрами ----

    def export_params(self) -> ParamVector:
        return self.params.copy()

    def load_params(self, vector: ParamVector, sync_target: bool = False) -> None:
        """
        Загрузка параметров на место (view сетей остаются валидными).

        Raises:
            LayoutMismatchError: раскладка не совпадает
        """
        try:
            check_same_layout(self.layout, vector.layout)
        except LayoutMismatchError:
            logger.error("Refusing parameters of size %d for a %s learner of size %d",
                         vector.layout.size, self.mode, self.layout.size)
            raise
        self.params.assign(vector)
        if sync_target:
            self.sync_target()
