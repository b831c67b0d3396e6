"""Сборка симулированной среды из выученной модели."""

import logging

from common.env import EnvSpec
from common.envlearn.channel_fit import LearnedChannel
from common.envlearn.localization import LocalizationResult
from common.exceptions import ConfigError
from common.schemas import DeviceSpec, UavSpec
from common.world import CityMap
from config import ChannelParams, EnvConfig

logger = logging.getLogger(__name__)


def build_simulated_env(
    city: CityMap,
    devices: list[DeviceSpec],
    localization: dict[int, LocalizationResult],
    channel: LearnedChannel,
    uavs: list[UavSpec],
    link_params: ChannelParams,
    env_cfg: EnvConfig | None = None,
) -> EnvSpec:
    """
    EnvSpec, совпадающий с реальным кроме позиций неякорных устройств и канала.

    Неякорное устройство ставится в клетку, содержащую его оценку; объём
    данных копируется без изменений. Из link_params берутся только мощность
    передатчика, шум и порог SNR.

    Raises:
        ConfigError: для неякорного устройства нет оценки позиции
    """
    placed = []
    for device in devices:
        if device.anchor:
            placed.append(device)
            continue
        result = localization.get(device.id)
        if result is None:
            raise ConfigError(f"devices[{device.id}]: no position estimate for a non-anchor device")
        placed.append(device.model_copy(update={"cell": city.cell_of(result.x, result.y)}))

    return EnvSpec(
        city=city,
        devices=tuple(placed),
        uavs=tuple(uavs),
        channel=link_params,
        radio=channel,
        env=env_cfg or EnvConfig(),
    )
