"""
Репозиторий траекторий (JSON).
"""

import json
from pathlib import Path


class TrajectoryRepository:
    """Траектории эпизодов: шаги, устройства, оценки позиций"""

    def __init__(self, directory: Path):
        self.directory = directory

    def path_for(self, name: str) -> Path:
        return self.directory / f"{name}.json"

    def save(self, name: str, trajectory: dict) -> Path:
        path = self.path_for(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(trajectory, indent=2, sort_keys=True), encoding="utf-8")
        return path

    @staticmethod
    def load(path: Path) -> dict:
        return json.loads(Path(path).read_text(encoding="utf-8"))
