"""
Репозиторий отчётов локализации (CSV).
"""

import csv
from collections.abc import Iterable
from pathlib import Path

from common.envlearn import LocalizationResult

REPORT_COLUMNS = ("device_id", "x_hat", "y_hat", "nll", "n_meas")


class LocalizationRepository:
    """Колонка error_m добавляется, только если известна истинная позиция"""

    def __init__(self, path: Path):
        self.path = path

    def write(self, results: Iterable[LocalizationResult]) -> Path:
        results = sorted(results, key=lambda r: r.device_id)
        with_error = any(r.error_m is not None for r in results)
        columns = REPORT_COLUMNS + (("error_m",) if with_error else ())
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for r in results:
                row = [r.device_id, repr(r.x), repr(r.y), repr(r.nll), r.n_meas]
                if with_error:
                    row.append(repr(r.error_m) if r.error_m is not None else "")
                writer.writerow(row)
        return self.path

    def read(self) -> list[dict]:
        with self.path.open(newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))
