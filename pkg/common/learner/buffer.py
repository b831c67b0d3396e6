"""Буфер эпизодов с FIFO-вытеснением и паддингом батчей."""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from common.env import N_ACTIONS
from common.exceptions import BufferUnderflowError


@dataclass(eq=False)
class Episode:
    """
    Один эпизод длины T.

    obs, masks, states хранят T + 1 снимков (включая начальный),
    actions, rewards, terminated по одному на шаг.
    """

    obs: np.ndarray
    masks: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray

    @property
    def length(self) -> int:
        return int(self.actions.shape[0])


@dataclass(eq=False)
class EpisodeRecorder:
    """Накопление шагов эпизода во время роллаута"""

    obs: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    terminated: list = field(default_factory=list)

    def start(self, observations: list[np.ndarray], masks: np.ndarray, global_state: np.ndarray) -> None:
        self.obs.append(np.stack(observations))
        self.masks.append(np.asarray(masks, dtype=np.float64))
        self.states.append(global_state)

    def add(self, actions: list[int], reward: float, observations: list[np.ndarray],
            masks: np.ndarray, global_state: np.ndarray, terminated: bool) -> None:
        self.actions.append(np.asarray(actions, dtype=np.int64))
        self.rewards.append(reward)
        self.terminated.append(terminated)
        self.start(observations, masks, global_state)

    def finish(self) -> Episode:
        return Episode(
            obs=np.stack(self.obs),
            masks=np.stack(self.masks),
            states=np.stack(self.states),
            actions=np.stack(self.actions) if self.actions else np.zeros((0, self.obs[0].shape[0]), dtype=np.int64),
            rewards=np.asarray(self.rewards, dtype=np.float64),
            terminated=np.asarray(self.terminated, dtype=bool),
        )


@dataclass(eq=False)
class EpisodeBatch:
    """Батч B эпизодов, дополненный нулями до максимальной длины T"""

    obs: np.ndarray          # (B, T+1, I, O)
    masks: np.ndarray        # (B, T+1, I, 6)
    states: np.ndarray       # (B, T+1, S)
    actions: np.ndarray      # (B, T, I)
    rewards: np.ndarray      # (B, T)
    terminated: np.ndarray   # (B, T)
    filled: np.ndarray       # (B, T)

    @property
    def size(self) -> int:
        return int(self.actions.shape[0])

    @property
    def max_length(self) -> int:
        return int(self.actions.shape[1])

    @classmethod
    def from_episodes(cls, episodes: list[Episode]) -> "EpisodeBatch":
        b = len(episodes)
        t_max = max(ep.length for ep in episodes)
        first = episodes[0]
        n_agents, obs_dim = first.obs.shape[1:]
        batch = cls(
            obs=np.zeros((b, t_max + 1, n_agents, obs_dim)),
            masks=np.zeros((b, t_max + 1, n_agents, N_ACTIONS)),
            states=np.zeros((b, t_max + 1, first.states.shape[1])),
            actions=np.zeros((b, t_max, n_agents), dtype=np.int64),
            rewards=np.zeros((b, t_max)),
            terminated=np.zeros((b, t_max), dtype=bool),
            filled=np.zeros((b, t_max)),
        )
        for n, ep in enumerate(episodes):
            t = ep.length
            batch.obs[n, :t + 1] = ep.obs
            batch.masks[n, :t + 1] = ep.masks
            batch.states[n, :t + 1] = ep.states
            batch.actions[n, :t] = ep.actions
            batch.rewards[n, :t] = ep.rewards
            batch.terminated[n, :t] = ep.terminated
            batch.filled[n, :t] = 1.0
        return batch


class EpisodeBuffer:
    """Хранит не больше capacity эпизодов, старые вытесняются первыми"""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        self.capacity = capacity
        self._episodes: deque[Episode] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._episodes)

    def add(self, episode: Episode) -> None:
        self._episodes.append(episode)

    def clear(self) -> None:
        self._episodes.clear()

    def sample(self, batch_size: int, rng: np.random.Generator) -> EpisodeBatch:
        """
        Случайные batch_size эпизодов без повторов.

        Raises:
            BufferUnderflowError: эпизодов меньше batch_size
        """
        if len(self._episodes) < batch_size:
            raise BufferUnderflowError(f"buffer holds {len(self._episodes)} episodes, batch needs {batch_size}")
        picked = rng.choice(len(self._episodes), size=batch_size, replace=False)
        return EpisodeBatch.from_episodes([self._episodes[int(n)] for n in picked])
