"""
Базовые алгоритмы для сравнения.

- qmix / iql: обучение прямо в реальной среде, каждый эпизод реальный;
- ma-qmix: model-aided QMIX, то есть алгоритм с одним учеником.
"""

import logging
import math
from typing import Literal

from common.env import HarvestEnv
from common.federation.runner import RunResult, make_learner, run_algorithm1
from common.learner import EpisodeBuffer, run_episode
from common.scenarios import real_env_spec
from common.seeding import make_rng
from common.storage import RunStore
from config import Config

logger = logging.getLogger(__name__)

BaselineMode = Literal["qmix", "iql", "ma-qmix"]


def single_learner_config(cfg: Config) -> Config:
    seeds = cfg.fed.learner_seeds[:1] if cfg.fed.learner_seeds else None
    return cfg.model_copy(update={"fed": cfg.fed.model_copy(update={"learners": 1, "learner_seeds": seeds})})


def run_baseline(mode: BaselineMode, cfg: Config, store: RunStore | None = None) -> RunResult:
    """
    Запуск базового алгоритма.

    Для qmix / iql строка метрик пишется на каждый обучающий эпизод.
    """
    if mode == "ma-qmix":
        return run_algorithm1(single_learner_config(cfg), store)
    if mode not in ("qmix", "iql"):
        raise ValueError(f"unknown baseline {mode!r}")

    env = HarvestEnv(real_env_spec(cfg))
    learner = make_learner(cfg, env, mode=mode)
    buffer = EpisodeBuffer(cfg.learner.buffer_capacity)
    rng = make_rng(cfg.seed, "real_world")
    episodes = cfg.fed.baseline_episodes or cfg.fed.e_max * cfg.fed.episodes_per_iteration
    logger.info("Baseline %s: %d real-world episodes", mode, episodes)

    metrics = []
    for n in range(episodes):
        result = run_episode(learner, env, rng, buffer=buffer)
        loss = learner.train_step(buffer, rng) if len(buffer) >= cfg.learner.batch_size else math.nan
        metrics.append({
            "iteration": n,
            "real_world_episodes": n + 1,
            "collection_ratio": float(result.collection_ratio),
            "mean_loss": float(loss),
            "mean_localization_error_m": math.nan,
        })
        if (n + 1) % 100 == 0:
            logger.info("Baseline %s: episode %d, ratio %.4f", mode, n + 1, result.collection_ratio)

    params = learner.export_params()
    fingerprint = learner.fingerprint()
    if store is not None:
        store.metrics.write(metrics)
        store.checkpoints.save(params, fingerprint)
    return RunResult(params=params, metrics=metrics, fingerprint=fingerprint)
