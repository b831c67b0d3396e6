"""
Репозиторий метрик прогона (CSV).
"""

import csv
import math
from pathlib import Path

# Колонки метрик внешнего цикла
METRICS_COLUMNS = ("iteration", "real_world_episodes", "collection_ratio", "mean_loss", "mean_localization_error_m")


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(value: str) -> int | float | str:
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


class MetricsRepository:
    """
    Метрики как CSV с детерминированным форматом чисел (repr).

    Использование:
        repo = MetricsRepository(out_dir / "metrics.csv")
        repo.append({"iteration": 0, ...})
        rows = repo.read()
    """

    def __init__(self, path: Path, columns: tuple[str, ...] = METRICS_COLUMNS):
        self.path = path
        self.columns = columns

    def write(self, rows: list[dict]) -> Path:
        """Перезаписать файл целиком."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=self.columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _format(row.get(key, math.nan)) for key in self.columns})
        return self.path

    def append(self, row: dict) -> None:
        """Дописать строку; заголовок пишется при создании файла."""
        new_file = not self.path.exists()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=self.columns, lineterminator="\n")
            if new_file:
                writer.writeheader()
            writer.writerow({key: _format(row.get(key, math.nan)) for key in self.columns})

    def read(self) -> list[dict]:
        with self.path.open(newline="", encoding="utf-8") as f:
            return [{key: _parse(value) for key, value in row.items()} for row in csv.DictReader(f)]

    @staticmethod
    def read_path(path: Path) -> list[dict]:
        return MetricsRepository(Path(path)).read()
