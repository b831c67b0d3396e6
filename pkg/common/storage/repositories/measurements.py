"""
Репозиторий измерений канала (CSV).
"""

import csv
from collections.abc import Iterable
from pathlib import Path

from common.env import MeasurementRecord
from common.envlearn import MeasurementSet
from common.exceptions import ConfigError
from common.world import GridPos

MEASUREMENT_COLUMNS = ("uav_id", "t", "ix", "iy", "altitude_m", "device_id", "gain_db")


class MeasurementRepository:
    """
    Использование:
        repo = MeasurementRepository(out_dir / "measurements.csv")
        repo.write(measurements)
        measurements = MeasurementRepository.read_path(path)
    """

    def __init__(self, path: Path):
        self.path = path

    def write(self, records: Iterable[MeasurementRecord]) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(MEASUREMENT_COLUMNS)
            for r in records:
                writer.writerow([
                    r.uav_id, r.t, r.uav_pos.ix, r.uav_pos.iy,
                    repr(float(r.uav_pos.altitude_m)), r.device_id, repr(float(r.gain_db)),
                ])
        return self.path

    def read(self) -> MeasurementSet:
        """
        Raises:
            ConfigError: файл не читается, нет колонок или битое значение (с номером строки)
        """
        try:
            f = self.path.open(newline="", encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"{self.path}: {e.strerror}") from e
        with f:
            reader = csv.DictReader(f)
            missing = [c for c in MEASUREMENT_COLUMNS if c not in (reader.fieldnames or [])]
            if reader.fieldnames is not None and missing:
                raise ConfigError(f"{self.path}: missing columns {missing}")
            records = []
            for line, row in enumerate(reader, start=2):
                try:
                    records.append(MeasurementRecord(
                        uav_id=int(row["uav_id"]),
                        t=int(row["t"]),
                        uav_pos=GridPos(int(row["ix"]), int(row["iy"]), float(row["altitude_m"])),
                        device_id=int(row["device_id"]),
                        gain_db=float(row["gain_db"]),
                    ))
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"{self.path}:{line}: {e}") from e
        return MeasurementSet(records)

    @staticmethod
    def read_path(path: Path) -> MeasurementSet:
        return MeasurementRepository(Path(path)).read()
