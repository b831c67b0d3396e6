"""Длинные прогоны: оптимальность на табличной задаче, локализация, сигнал обучения."""

from functools import cache
from pathlib import Path

import numpy as np
import pytest

from common.env import Action, HarvestEnv, obs_dim, state_dim
from common.envlearn import LearnedChannel, grid_search, localize
from common.federation import make_learner, run_algorithm1
from common.learner import EpisodeBuffer, QLearner, greedy_rollout, run_episode
from common.scenarios import build_rbm, real_env_spec
from common.seeding import make_rng
from common.world import GridPos
from config import ChannelParams, Config, EnvLearnConfig, LearnerConfig, PsoConfig
from tests.test_envlearn import device_measurements

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def best_collection(env: HarvestEnv) -> float:
    """
    Максимум собранных данных по всем допустимым последовательностям действий.

    Один БПЛА и одно устройство, sigma = 0: скорость зависит только от клетки,
    а сбор по пути равен min(D0, сумма скоростей), поскольку каждый слот
    забирает min(скорость, остаток). Поэтому буфер можно не отслеживать:
    максимум сумм по динамике (клетка, заряд), затем одно ограничение D0.
    """
    rng = np.random.default_rng(0)
    start, _, _ = env.reset(rng)
    initial = start.data.copy()
    states = {}

    @cache
    def value(ix: int, iy: int, battery: float) -> float:
        state = states[(ix, iy, battery)]
        best = 0.0
        for action in sorted(env.feasible_actions(state, 0)):
            outcome = env.step(state, [action], rng)
            nxt = outcome.state
            nxt.data = initial.copy()
            gained = outcome.reward
            if not outcome.episode_done:
                key = (int(nxt.positions[0, 0]), int(nxt.positions[0, 1]), float(nxt.batteries[0]))
                states.setdefault(key, nxt)
                gained += value(*key)
            best = max(best, gained)
        return best

    key = (int(start.positions[0, 0]), int(start.positions[0, 1]), float(start.batteries[0]))
    states[key] = start
    return min(float(initial.sum()), value(*key))


def hover_collection(env: HarvestEnv) -> float:
    """Сбор политикой, которая висит на месте, пока не кончится заряд."""
    rng = np.random.default_rng(0)
    state, _, _ = env.reset(rng)
    total = 0.0
    while True:
        outcome = env.step(state, [Action.HOVER], rng)
        total += outcome.reward
        state = outcome.state
        if outcome.episode_done:
            return total


def test_tabular_optimality(tabular_env):
    optimum = best_collection(tabular_env)
    # туда и обратно через соседнюю клетку, четыре слота висения в центре
    assert optimum == pytest.approx(2 * 0.1873 + 5 * 0.3754, rel=1e-3)
    hover = hover_collection(tabular_env)
    assert hover == pytest.approx(11 * 0.1227, rel=1e-3)
    assert hover < 0.95 * optimum

    spec = tabular_env.spec
    cfg = LearnerConfig(
        gamma=0.9, batch_size=16, target_update_period=20, epsilon_decay_steps=8000,
        hidden_dim=32, embed_dim=8, hypernet_dim=16, learning_rate=1e-3, buffer_capacity=500,
    )
    rng = np.random.default_rng(11)
    learner = QLearner(cfg, spec.n_agents, obs_dim(spec.n_agents, spec.n_devices),
                       state_dim(spec.n_agents, spec.n_devices), rng)
    buffer = EpisodeBuffer(cfg.buffer_capacity)
    for _ in range(2000):
        run_episode(learner, tabular_env, rng, buffer=buffer)
        if len(buffer) >= cfg.batch_size:
            learner.train_step(buffer, rng)

    result = greedy_rollout(learner, tabular_env, rng)
    assert result.collected >= 0.95 * optimum


def test_localization_accuracy():
    city = build_rbm()
    params = ChannelParams()
    channel = LearnedChannel.from_params(params)
    altitudes = (55.0, 60.0, 65.0)
    positions = [
        GridPos(ix, iy, altitudes[n % 3])
        for n, (ix, iy) in enumerate((ix, iy) for ix in (6, 18, 30, 42, 54) for iy in (8, 24, 40, 56, 72))
    ]
    unknown = [d for d in city.devices if not d.anchor]

    errors = []
    for seed in range(20):
        device = unknown[seed % len(unknown)]
        measurements = device_measurements(
            city, device.cell, positions, params, np.random.default_rng(seed), repeats=8, device_id=device.id,
        )
        assert len(measurements) == 200
        result = localize(device.id, measurements, channel, city, PsoConfig(seed=seed), EnvLearnConfig())
        _, _, grid_nll = grid_search(measurements.for_device(device.id, city), channel, city)
        assert result.nll <= grid_nll + 1e-6
        truth = city.center(*device.cell)
        errors.append(float(np.hypot(result.x - truth[0], result.y - truth[1])))

    assert float(np.median(errors)) <= 2 * city.cell_size_m


def test_desk_learning_signal(tmp_path):
    trained, baseline = [], []
    for seed in range(3):
        cfg = Config.from_file(CONFIGS / "desk.json", seed=seed, out_dir=str(tmp_path / f"desk{seed}"))
        result = run_algorithm1(cfg)
        assert result.state.real_world_episodes == cfg.fed.e_max == 10
        for worker in result.state.workers:
            assert worker.episodes == cfg.fed.e_max * cfg.fed.episodes_per_iteration

        env = HarvestEnv(real_env_spec(cfg))
        learner = make_learner(cfg, env)
        learner.load_params(result.params, sync_target=True)
        trained.append(greedy_rollout(learner, env, make_rng(seed, "eval")).collection_ratio)

        rng = make_rng(seed, "eval")
        baseline.append(np.mean([run_episode(learner, env, rng, epsilon=1.0).collection_ratio for _ in range(30)]))

    assert np.mean(trained) >= 2.0 * np.mean(baseline)
