from common.storage.repositories.checkpoints import CheckpointRepository
from common.storage.repositories.localization import LocalizationRepository
from common.storage.repositories.measurements import MEASUREMENT_COLUMNS, MeasurementRepository
from common.storage.repositories.metrics import METRICS_COLUMNS, MetricsRepository
from common.storage.repositories.trajectories import TrajectoryRepository

__all__ = [
    "MEASUREMENT_COLUMNS",
    "METRICS_COLUMNS",
    "CheckpointRepository",
    "LocalizationRepository",
    "MeasurementRepository",
    "MetricsRepository",
    "TrajectoryRepository",
]
