"""Общие фикстуры тестов"""

import numpy as np
import pytest

from common.channel import GroundTruthRadio
from common.env import EnvSpec, HarvestEnv
from common.schemas import DeviceSpec, UavSpec
from common.world import CityMap
from config import ChannelParams, Config, EnvConfig, EnvLearnConfig, FedConfig, LearnerConfig, PsoConfig


def open_city(width: int = 3, height: int = 3, start=(0, 0), terminal=None, cell_size_m: float = 10.0, **kwargs):
    """Карта без зданий."""
    return CityMap(
        cell_size_m=cell_size_m,
        heights_m=np.zeros((height, width)),
        start_cell=start,
        terminal_cell=terminal if terminal is not None else start,
        **kwargs,
    )


def make_spec(
    city: CityMap,
    devices,
    uavs,
    channel: ChannelParams | None = None,
    env_cfg: EnvConfig | None = None,
) -> EnvSpec:
    channel = channel or ChannelParams()
    return EnvSpec(
        city=city,
        devices=tuple(devices),
        uavs=tuple(uavs),
        channel=channel,
        radio=GroundTruthRadio(channel),
        env=env_cfg or EnvConfig(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tabular_env() -> HarvestEnv:
    """
    3 x 3, один БПЛА с зарядом 6, одно устройство в противоположном углу.

    Шум поднят так, что из старта канал слабый (около 0.12 за слот), из центра
    около 0.38: оптимум летит в центр и висит там, висение на старте заметно хуже.
    """
    city = open_city(3, 3, start=(0, 0))
    channel = ChannelParams(sigma_los=0.0, sigma_nlos=0.0, noise_power_w=4e-7)
    return HarvestEnv(make_spec(
        city,
        [DeviceSpec(id=0, cell=(2, 2), data_init=3.0)],
        [UavSpec(id=0, altitude_m=10.0, battery_init=6.0)],
        channel=channel,
    ))


@pytest.fixture
def two_uav_env() -> HarvestEnv:
    """5 x 5, два БПЛА, три устройства (одно якорь)."""
    city = open_city(5, 5, start=(2, 2))
    return HarvestEnv(make_spec(
        city,
        [
            DeviceSpec(id=0, cell=(0, 0), data_init=40.0, anchor=True),
            DeviceSpec(id=1, cell=(4, 4), data_init=40.0),
            DeviceSpec(id=2, cell=(0, 4), data_init=40.0),
        ],
        [UavSpec(id=0, altitude_m=20.0, battery_init=8.0), UavSpec(id=1, altitude_m=25.0, battery_init=8.0)],
    ))


@pytest.fixture
def small_learner_config() -> LearnerConfig:
    return LearnerConfig(
        hidden_dim=6, embed_dim=3, hypernet_dim=5, batch_size=2, buffer_capacity=50,
        target_update_period=3, epsilon_decay_steps=100,
    )


@pytest.fixture
def tiny_config(tmp_path) -> Config:
    """Desk-сценарий с минимальными сетями и короткими циклами."""
    return Config(
        map="builtin:desk",
        seed=3,
        out_dir=tmp_path / "run",
        learner=LearnerConfig(
            hidden_dim=8, embed_dim=4, hypernet_dim=8, batch_size=2, buffer_capacity=20,
            target_update_period=2, epsilon_decay_steps=200,
        ),
        fed=FedConfig(learners=2, n_freq=2, episodes_per_iteration=3, e_max=2, concurrent=False),
        pso=PsoConfig(particles=6, iterations=3),
        envlearn=EnvLearnConfig(min_samples=5, min_measurements=3),
    )
