"""
Типы данных симулятора.
"""

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from common.channel import RadioModel
from common.schemas import DeviceSpec, UavSpec
from common.world import CityMap, GridPos
from config import ChannelParams, EnvConfig


class Action(IntEnum):
    """Действия БПЛА; порядок совпадает с выходами Q-сети"""

    HOVER = 0
    NORTH = 1
    WEST = 2
    SOUTH = 3
    EAST = 4
    NOOP = 5


N_ACTIONS = len(Action)

DISPLACEMENT: dict[Action, tuple[int, int]] = {
    Action.HOVER: (0, 0),
    Action.NORTH: (0, 1),
    Action.WEST: (-1, 0),
    Action.SOUTH: (0, -1),
    Action.EAST: (1, 0),
    Action.NOOP: (0, 0),
}

ENERGY_COST: dict[Action, float] = {
    Action.HOVER: 0.5,
    Action.NORTH: 1.0,
    Action.WEST: 1.0,
    Action.SOUTH: 1.0,
    Action.EAST: 1.0,
    Action.NOOP: 0.0,
}


@dataclass(frozen=True, eq=False)
class EnvSpec:
    """
    Всё, что нужно для сборки среды.

    Реальная среда и выученная симуляция различаются только позициями
    неякорных устройств и моделью канала (radio).
    """

    city: CityMap
    devices: tuple[DeviceSpec, ...]
    uavs: tuple[UavSpec, ...]
    channel: ChannelParams
    radio: RadioModel
    env: EnvConfig = field(default_factory=EnvConfig)

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(sorted(self.devices, key=lambda d: d.id)))
        object.__setattr__(self, "uavs", tuple(sorted(self.uavs, key=lambda u: u.id)))

    @property
    def n_agents(self) -> int:
        return len(self.uavs)

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def total_data(self) -> float:
        return float(sum(d.data_init for d in self.devices))


@dataclass(frozen=True, slots=True)
class MeasurementRecord:
    """Измерение усиления канала БПЛА–устройство"""

    uav_id: int
    t: int
    uav_pos: GridPos
    device_id: int
    gain_db: float


@dataclass(eq=False)
class LinkTable:
    """Каналы текущего слота: БПЛА×устройства и БПЛА×БПЛА"""

    device_gain: np.ndarray
    device_los: np.ndarray
    device_snr: np.ndarray
    device_rate: np.ndarray
    device_reach: np.ndarray
    peer_snr: np.ndarray
    peer_reach: np.ndarray


@dataclass(eq=False)
class EnvState:
    """Полный снимок Dec-POMDP"""

    t: int
    positions: np.ndarray
    batteries: np.ndarray
    done: np.ndarray
    data: np.ndarray
    links: LinkTable
    schedule: np.ndarray
    frozen_obs: list = field(default_factory=list)

    def copy(self) -> "EnvState":
        return replace(
            self,
            positions=self.positions.copy(),
            batteries=self.batteries.copy(),
            done=self.done.copy(),
            data=self.data.copy(),
            schedule=self.schedule.copy(),
            frozen_obs=list(self.frozen_obs),
        )


@dataclass(eq=False)
class StepOutcome:
    """Результат шага среды"""

    state: EnvState
    observations: list[np.ndarray]
    masks: np.ndarray
    global_state: np.ndarray
    reward: float
    schedule: dict[int, int | None]
    throughputs: dict[tuple[int, int], float]
    measurements: list[MeasurementRecord]
    episode_done: bool
