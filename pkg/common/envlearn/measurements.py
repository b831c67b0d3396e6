"""Накопленные измерения усиления канала."""

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from common.env import MeasurementRecord
from common.world import CityMap


@dataclass(frozen=True, eq=False)
class DeviceMeasurements:
    """Измерения одного устройства в виде массивов"""

    device_id: int
    uav_cells: np.ndarray   # (N, 2) ix, iy
    altitudes: np.ndarray   # (N,)
    uav_xyz: np.ndarray     # (N, 3)
    gain_db: np.ndarray     # (N,)

    def __len__(self) -> int:
        return int(self.gain_db.shape[0])

    def positions(self) -> list[tuple[int, int, float]]:
        """Уникальные позиции БПЛА (ix, iy, altitude) в порядке появления."""
        seen: dict[tuple[int, int, float], None] = {}
        for (ix, iy), alt in zip(self.uav_cells.tolist(), self.altitudes.tolist()):
            seen.setdefault((int(ix), int(iy), float(alt)), None)
        return list(seen)


class MeasurementSet:
    """
    Пополняемый набор измерений за все реальные эпизоды.

    Использование:
        measurements = MeasurementSet()
        measurements.extend(result.measurements)
        per_device = measurements.for_device(3, city)
    """

    def __init__(self, records: Iterable[MeasurementRecord] = ()):
        self._records: list[MeasurementRecord] = list(records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> tuple[MeasurementRecord, ...]:
        return tuple(self._records)

    def extend(self, records: Iterable[MeasurementRecord]) -> None:
        self._records.extend(records)

    def device_ids(self) -> list[int]:
        return sorted({r.device_id for r in self._records})

    def count(self, device_id: int) -> int:
        return sum(1 for r in self._records if r.device_id == device_id)

    def subset(self, device_ids: Iterable[int]) -> "MeasurementSet":
        wanted = set(device_ids)
        return MeasurementSet(r for r in self._records if r.device_id in wanted)

    def for_device(self, device_id: int, city: CityMap) -> DeviceMeasurements:
        picked = [r for r in self._records if r.device_id == device_id]
        cells = np.array([(r.uav_pos.ix, r.uav_pos.iy) for r in picked], dtype=np.int64).reshape(-1, 2)
        altitudes = np.array([r.uav_pos.altitude_m for r in picked], dtype=np.float64)
        xyz = np.column_stack([
            (cells[:, 0] + 0.5) * city.cell_size_m,
            (cells[:, 1] + 0.5) * city.cell_size_m,
            altitudes,
        ]) if picked else np.zeros((0, 3))
        return DeviceMeasurements(
            device_id=device_id,
            uav_cells=cells,
            altitudes=altitudes,
            uav_xyz=xyz,
            gain_db=np.array([r.gain_db for r in picked], dtype=np.float64),
        )
