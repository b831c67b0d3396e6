"""Прогон эпизода политикой ученика."""

import logging
from dataclasses import dataclass, field

import numpy as np

from common.env import HarvestEnv, MeasurementRecord
from common.exceptions import ContractViolation
from common.learner.buffer import Episode, EpisodeBuffer, EpisodeRecorder
from common.learner.qlearner import NO_ACTION, QLearner

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class EpisodeResult:
    collected: float
    collection_ratio: float
    steps: int
    episode: Episode
    measurements: list[MeasurementRecord] = field(default_factory=list)
    trajectory: list[dict] = field(default_factory=list)

    @property
    def total_reward(self) -> float:
        """Сумма нормированных наград эпизода (равна collection_ratio)."""
        return float(self.episode.rewards.sum())


def run_episode(
    learner: QLearner,
    env: HarvestEnv,
    rng: np.random.Generator,
    epsilon: float | None = None,
    buffer: EpisodeBuffer | None = None,
    record_trajectory: bool = False,
) -> EpisodeResult:
    """
    Один ε-greedy эпизод до завершения всех агентов.

    Args:
        epsilon: None = расписание ученика; шаги среды тогда учитываются в learner.env_steps
        buffer: если задан, эпизод сохраняется в него
    """
    use_schedule = epsilon is None
    state, observations, global_state = env.reset(rng)
    masks = np.stack([env.feasibility_mask(state, i) for i in range(env.n_agents)])
    recorder = EpisodeRecorder()
    recorder.start(observations, masks, global_state)

    hidden = learner.init_hidden()
    prev_actions = np.full(env.n_agents, NO_ACTION)
    measurements: list[MeasurementRecord] = []
    trajectory: list[dict] = []
    if record_trajectory:
        trajectory.append({
            "t": 0,
            "uavs": [
                {"id": u.id, "cell": [int(c) for c in state.positions[i]],
                 "battery": float(state.batteries[i]), "device": None}
                for i, u in enumerate(env.spec.uavs)
            ],
            "reward": 0.0,
        })

    # Ученик видит награду в долях от всех данных, метрики считаются в единицах данных
    total = env.spec.total_data
    reward_scale = 1.0 / total if total > 0 else 1.0

    # Контроллер безопасности завершает эпизод не позже чем за 2 * max(b0) шагов
    step_limit = int(2 * max(u.battery_init for u in env.spec.uavs)) + 1
    collected = 0.0
    done = False
    while not done:
        if state.t >= step_limit:
            raise ContractViolation(f"episode did not terminate within {step_limit} steps")
        eps = learner.epsilon() if use_schedule else epsilon
        actions, hidden = learner.select_actions(hidden, observations, masks, prev_actions, eps, rng)
        outcome = env.step(state, actions, rng)
        if use_schedule:
            learner.env_steps += 1

        state, observations, masks = outcome.state, outcome.observations, outcome.masks
        collected += outcome.reward
        measurements.extend(outcome.measurements)
        recorder.add(actions, outcome.reward * reward_scale, observations, masks, outcome.global_state, outcome.episode_done)
        if record_trajectory:
            trajectory.append(env.trajectory_record(outcome))
        prev_actions = np.asarray(actions)
        done = outcome.episode_done

    episode = recorder.finish()
    if buffer is not None:
        buffer.add(episode)
    ratio = env.collection_ratio(collected)
    logger.debug("Episode finished: %d steps, return %.1f, ratio %.3f", state.t, collected, ratio)
    return EpisodeResult(
        collected=collected,
        collection_ratio=ratio,
        steps=state.t,
        episode=episode,
        measurements=measurements,
        trajectory=trajectory,
    )


def greedy_rollout(learner: QLearner, env: HarvestEnv, rng: np.random.Generator) -> EpisodeResult:
    """Эпизод при ε = 0 с записью траектории."""
    return run_episode(learner, env, rng, epsilon=0.0, record_trajectory=True)


def trajectory_document(
    env: HarvestEnv, result: EpisodeResult, estimates: list[tuple[int, float, float]] | None = None
) -> dict:
    """JSON-документ траектории: шаги, устройства, оценки позиций неякорных устройств."""
    return {
        "cell_size_m": env.spec.city.cell_size_m,
        "collection_ratio": result.collection_ratio,
        "collected": result.collected,
        "devices": [
            {"id": d.id, "cell": list(d.cell), "anchor": d.anchor, "data_init": d.data_init}
            for d in env.spec.devices
        ],
        "estimates": [{"device_id": k, "x": x, "y": y} for k, x, y in (estimates or [])],
        "steps": result.trajectory,
    }
