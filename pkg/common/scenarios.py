"""
Встроенные сценарии (карты с устройствами и БПЛА) и сборка реальной среды.

Карта задаётся ключом map в конфиге: путь к JSON или builtin:<name>.
"""

import logging
from collections.abc import Callable

import numpy as np

from common.channel import GroundTruthRadio
from common.env import EnvSpec
from common.exceptions import ConfigError
from common.schemas import DeviceSpec, UavSpec
from common.world import CityMap, load_map
from config import Config

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"


def _block_heights(
    width: int, height: int, block: int, street: int, max_height_m: float, rng: np.random.Generator
) -> np.ndarray:
    """Кварталы block x block клеток с улицами ширины street; часть кварталов пустые."""
    heights = np.zeros((height, width))
    for by in range(0, height, block):
        for bx in range(0, width, block):
            if rng.random() < 0.2:
                continue
            heights[by + street:by + block, bx + street:bx + block] = rng.uniform(10.0, max_height_m)
    return heights


def _street_devices(
    heights: np.ndarray,
    count: int,
    anchors: int,
    data_init: float,
    exclude: set[tuple[int, int]],
    rng: np.random.Generator,
) -> tuple[DeviceSpec, ...]:
    iy, ix = np.nonzero(heights == 0)
    cells = [(int(x), int(y)) for x, y in zip(ix, iy) if (int(x), int(y)) not in exclude]
    picked = rng.choice(len(cells), size=count, replace=False)
    return tuple(
        DeviceSpec(id=k, cell=cells[int(n)], data_init=data_init, anchor=k < anchors)
        for k, n in enumerate(picked)
    )


def build_rbm() -> CityMap:
    """Return-base: 600 x 800 м, старт и терминал в центре."""
    rng = np.random.default_rng(1001)
    heights = _block_heights(60, 80, block=10, street=2, max_height_m=54.0, rng=rng)
    centre = (30, 40)
    return CityMap(
        cell_size_m=10.0,
        heights_m=heights,
        start_cell=centre,
        terminal_cell=centre,
        devices=_street_devices(heights, 10, 3, 16000.0, {centre}, rng),
        uavs=tuple(UavSpec(id=i, altitude_m=alt, battery_init=60.0) for i, alt in enumerate((55.0, 60.0, 65.0))),
    )


def build_rdm() -> CityMap:
    """
    Reach-destination: 1000 x 1200 м, старт в клетке (30, 40), терминал в (60, 70).

    Старт и терминал разнесены на 60 шагов, чтобы при заряде 80 оставался запас.
    """
    rng = np.random.default_rng(1002)
    heights = _block_heights(100, 120, block=10, street=2, max_height_m=54.0, rng=rng)
    start, terminal = (30, 40), (60, 70)
    return CityMap(
        cell_size_m=10.0,
        heights_m=heights,
        start_cell=start,
        terminal_cell=terminal,
        devices=_street_devices(heights, 10, 3, 20000.0, {start, terminal}, rng),
        uavs=tuple(UavSpec(id=i, altitude_m=alt, battery_init=80.0) for i, alt in enumerate((55.0, 60.0, 65.0))),
    )


def build_desk() -> CityMap:
    """Небольшая карта для быстрых прогонов: 200 x 200 м, 2 БПЛА, 4 устройства."""
    rng = np.random.default_rng(1003)
    heights = _block_heights(20, 20, block=5, street=1, max_height_m=25.0, rng=rng)
    centre = (10, 10)
    return CityMap(
        cell_size_m=10.0,
        heights_m=heights,
        start_cell=centre,
        terminal_cell=centre,
        devices=_street_devices(heights, 4, 2, 100.0, {centre}, rng),
        uavs=(UavSpec(id=0, altitude_m=30.0, battery_init=25.0), UavSpec(id=1, altitude_m=35.0, battery_init=25.0)),
    )


BUILTIN: dict[str, Callable[[], CityMap]] = {
    "rbm": build_rbm,
    "rdm": build_rdm,
    "desk": build_desk,
}


def resolve_map(cfg: Config) -> CityMap:
    """
    Карта по ключу cfg.map.

    Raises:
        ConfigError: неизвестный встроенный сценарий
        MapFormatError: файл карты не читается
    """
    if cfg.map.startswith(BUILTIN_PREFIX):
        name = cfg.map[len(BUILTIN_PREFIX):]
        if name not in BUILTIN:
            raise ConfigError(f"map: unknown builtin scenario {name!r}, expected one of {sorted(BUILTIN)}")
        return BUILTIN[name]()
    return load_map(cfg.resolve_path(cfg.map))


def real_env_spec(cfg: Config, city: CityMap | None = None) -> EnvSpec:
    """
    Спецификация реальной среды: истинные позиции устройств и эталонный канал.

    Raises:
        ConfigError: нет ни одного БПЛА или устройства
    """
    city = city or resolve_map(cfg)
    uavs = tuple(cfg.uavs) if cfg.uavs is not None else city.uavs
    if not uavs:
        raise ConfigError("uavs: the scenario declares no UAVs")
    if not city.devices:
        raise ConfigError("devices: the scenario declares no devices")
    return EnvSpec(
        city=city,
        devices=city.devices,
        uavs=uavs,
        channel=cfg.channel,
        radio=GroundTruthRadio(cfg.channel),
        env=cfg.env,
    )
