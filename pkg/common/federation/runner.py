"""
Внешний цикл model-aided FedQMIX.

Одна внешняя итерация:
    1. реальный эпизод глобальной политикой, сбор измерений;
    2. подгонка канала и локализация, пересборка симуляций учеников;
    3. обучение учеников в своих симуляциях синхронными раундами по
       n_freq эпизодов с усреднением и рассылкой после каждого раунда.
"""

import asyncio
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from common.env import HarvestEnv, obs_dim, state_dim
from common.envlearn import (
    LearnedChannel,
    LocalizationResult,
    MeasurementSet,
    build_simulated_env,
    fit_channel,
    localize_all,
    prior_channel,
)
from common.exceptions import InsufficientMeasurementsError
from common.federation.aggregation import aggregate
from common.learner import EpisodeBuffer, EpisodeResult, QLearner, run_episode, trajectory_document
from common.nn import ParamVector
from common.scenarios import real_env_spec
from common.seeding import learner_rngs, make_rng
from common.storage import RunStore
from config import Config

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class LearnerWorker:
    """Федеративный участник: свои сети, буфер, симуляция и генератор"""

    index: int
    learner: QLearner
    buffer: EpisodeBuffer
    rng: np.random.Generator
    env: HarvestEnv | None = None
    episodes: int = 0

    def train_episodes(self, count: int) -> list[float]:
        """count ε-greedy эпизодов в своей симуляции, по одному шагу обучения на эпизод."""
        if self.env is None:
            raise RuntimeError(f"learner {self.index}: simulated environment is not built")
        losses = []
        for _ in range(count):
            run_episode(self.learner, self.env, self.rng, buffer=self.buffer)
            self.episodes += 1
            if len(self.buffer) >= self.learner.cfg.batch_size:
                losses.append(self.learner.train_step(self.buffer, self.rng))
        return losses


@dataclass(eq=False)
class FedRunState:
    cfg: Config
    real_env: HarvestEnv
    policy: QLearner
    global_params: ParamVector
    workers: list[LearnerWorker]
    real_rng: np.random.Generator
    measurements: MeasurementSet = field(default_factory=MeasurementSet)
    channel: LearnedChannel | None = None
    localization: dict[int, LocalizationResult] = field(default_factory=dict)
    iteration: int = 0
    real_world_episodes: int = 0
    metrics: list[dict] = field(default_factory=list)
    last_real_episode: EpisodeResult | None = None


def make_learner(cfg: Config, env: HarvestEnv, mode: str | None = None) -> QLearner:
    """Ученик под размерности среды; параметры из потока init."""
    learner_cfg = cfg.learner if mode is None else cfg.learner.model_copy(update={"mode": mode})
    spec = env.spec
    return QLearner(
        learner_cfg,
        n_agents=spec.n_agents,
        obs_dim=obs_dim(spec.n_agents, spec.n_devices),
        state_dim=state_dim(spec.n_agents, spec.n_devices),
        rng=make_rng(cfg.seed, "init"),
    )


def init_run_state(cfg: Config) -> FedRunState:
    """Начальное состояние: общие theta у всех учеников, пустые буферы."""
    real_env = HarvestEnv(real_env_spec(cfg))
    policy = make_learner(cfg, real_env)
    global_params = policy.export_params()

    workers = []
    for index, rng in enumerate(learner_rngs(cfg.seed, cfg.fed.learners, cfg.fed.learner_seeds)):
        learner = make_learner(cfg, real_env)
        learner.load_params(global_params, sync_target=True)
        workers.append(LearnerWorker(index, learner, EpisodeBuffer(cfg.learner.buffer_capacity), rng))

    logger.info("FedQMIX run: %d learners, %d agents, %d devices, %d parameters",
                len(workers), real_env.n_agents, real_env.n_devices, global_params.layout.size)
    return FedRunState(
        cfg=cfg,
        real_env=real_env,
        policy=policy,
        global_params=global_params,
        workers=workers,
        real_rng=make_rng(cfg.seed, "real_world"),
    )


async def _train_concurrently(workers: list[LearnerWorker], count: int) -> list[list[float]]:
    return await asyncio.gather(*(asyncio.to_thread(w.train_episodes, count) for w in workers))


def train_round(workers: list[LearnerWorker], count: int, concurrent: bool) -> list[list[float]]:
    """Раунд обучения всех учеников; барьер перед усреднением."""
    if concurrent and len(workers) > 1:
        return asyncio.run(_train_concurrently(workers, count))
    return [w.train_episodes(count) for w in workers]


def learn_environment(state: FedRunState) -> None:
    """Шаг 2: канал по якорям, локализация, новые симуляции учеников."""
    cfg = state.cfg
    spec = state.real_env.spec
    city = spec.city
    anchors = [d for d in spec.devices if d.anchor]

    try:
        channel = fit_channel(state.measurements, anchors, city, cfg.envlearn, rng=make_rng(cfg.seed, "pso"))
    except InsufficientMeasurementsError as e:
        logger.warning("Using the prior channel: %s", e)
        channel = prior_channel(cfg.envlearn)
    state.channel = channel

    state.localization = localize_all(
        state.measurements, channel, city, list(spec.devices), cfg.pso, cfg.envlearn,
        previous=state.localization, with_errors=True,
    )
    sim_spec = build_simulated_env(
        city, list(spec.devices), state.localization, channel, list(spec.uavs), spec.channel, spec.env,
    )
    for worker in state.workers:
        worker.env = HarvestEnv(sim_spec)


def run_outer_iteration(state: FedRunState) -> FedRunState:
    """Одна итерация алгоритма: реальный эпизод, модель среды, федеративное обучение."""
    cfg = state.cfg
    fed = cfg.fed
    e = state.iteration
    logger.info("Outer iteration %d started", e)

    # 1. Реальный эпизод текущей глобальной политикой
    state.policy.load_params(state.global_params)
    real = run_episode(state.policy, state.real_env, state.real_rng, epsilon=fed.real_world_epsilon,
                       record_trajectory=True)
    state.real_world_episodes += 1
    state.measurements.extend(real.measurements)
    state.last_real_episode = real
    logger.info("Real-world episode %d: collection ratio %.4f, %d new measurements",
                state.real_world_episodes, real.collection_ratio, len(real.measurements))

    # 2. Модель среды
    learn_environment(state)

    # 3. Федеративное обучение в симуляциях
    if fed.reset_buffers:
        for worker in state.workers:
            worker.buffer.clear()
    losses: list[float] = []
    remaining = fed.episodes_per_iteration
    rounds = 0
    while remaining > 0:
        count = min(fed.n_freq, remaining)
        for worker_losses in train_round(state.workers, count, fed.concurrent):
            losses.extend(worker_losses)
        state.global_params = aggregate([w.learner.export_params() for w in state.workers])
        for worker in state.workers:
            worker.learner.load_params(state.global_params)
        remaining -= count
        rounds += 1
    logger.info("Outer iteration %d: %d aggregation rounds", e, rounds)

    errors = [r.error_m for r in state.localization.values() if r.error_m is not None]
    row = {
        "iteration": e,
        "real_world_episodes": state.real_world_episodes,
        "collection_ratio": float(real.collection_ratio),
        "mean_loss": float(np.mean(losses)) if losses else math.nan,
        "mean_localization_error_m": float(np.mean(errors)) if errors else math.nan,
    }
    state.metrics.append(row)
    state.iteration += 1
    return state


@dataclass(eq=False)
class RunResult:
    params: ParamVector
    metrics: list[dict]
    fingerprint: dict
    state: FedRunState | None = None


def run_algorithm1(cfg: Config, store: RunStore | None = None) -> RunResult:
    """
    E_max внешних итераций; метрики и чекпоинты пишутся после каждой.

    Returns:
        Финальные глобальные параметры и строки метрик
    """
    state = init_run_state(cfg)
    fingerprint = state.policy.fingerprint()
    if store is not None:
        store.reset_metrics()

    for _ in range(cfg.fed.e_max):
        run_outer_iteration(state)
        if store is not None:
            store.metrics.append(state.metrics[-1])
            store.checkpoints.save(state.global_params, fingerprint, iteration=state.iteration - 1)

    if store is not None:
        store.checkpoints.save(state.global_params, fingerprint)
        store.measurements.write(state.measurements)
        if state.localization:
            store.localization.write(state.localization.values())
        if state.last_real_episode is not None:
            estimates = [(r.device_id, r.x, r.y) for r in state.localization.values()]
            store.trajectories.save(
                "real_world_last", trajectory_document(state.real_env, state.last_real_episode, estimates)
            )
    logger.info("FedQMIX finished: %d real-world episodes", state.real_world_episodes)
    return RunResult(params=state.global_params, metrics=state.metrics, fingerprint=fingerprint, state=state)
