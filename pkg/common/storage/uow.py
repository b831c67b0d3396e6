"""
RunStore: единая точка доступа ко всем артефактам прогона.

Использование:
    store = RunStore(config.out_dir)
    store.metrics.append(row)
    store.checkpoints.save(params, fingerprint, iteration=0)
    store.trajectories.save("eval", trajectory)
"""

from pathlib import Path

from common.storage.repositories import (
    CheckpointRepository,
    LocalizationRepository,
    MeasurementRepository,
    MetricsRepository,
    TrajectoryRepository,
)


class RunStore:
    """
    Контейнер репозиториев одной выходной директории.

    Раскладка:
        <out>/metrics.csv
        <out>/checkpoints/iter_0000.pvec ... final.pvec
        <out>/trajectories/<name>.json
        <out>/measurements.csv
        <out>/localization.csv
        <out>/plots/<name>.svg
    """

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.metrics = MetricsRepository(self.out_dir / "metrics.csv")
        self.checkpoints = CheckpointRepository(self.out_dir / "checkpoints")
        self.trajectories = TrajectoryRepository(self.out_dir / "trajectories")
        self.measurements = MeasurementRepository(self.out_dir / "measurements.csv")
        self.localization = LocalizationRepository(self.out_dir / "localization.csv")

    def plot_path(self, name: str) -> Path:
        path = self.out_dir / "plots" / f"{name}.svg"
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def reset_metrics(self) -> None:
        """Удалить метрики прошлого прогона в той же директории."""
        self.metrics.path.unlink(missing_ok=True)
