"""Обработчик команды plot"""

import argparse
import logging

from cli.handlers.base import BaseHandler
from common.plots import plot_runs_from_files, plot_trajectory
from common.scenarios import resolve_map
from common.storage.repositories import TrajectoryRepository

logger = logging.getLogger(__name__)


class PlotHandler(BaseHandler):
    """Обработчик команды plot"""

    def handle(self, args: argparse.Namespace) -> None:
        """
        Перерисовка графиков из готовых артефактов: сравнение прогонов
        по CSV метрик и траектории по JSON.
        """
        metrics = args.metrics or ([self.store.metrics.path] if self.store.metrics.path.exists() else [])
        if metrics:
            plot_runs_from_files(metrics, self.store.plot_path("performance"))
        for path in args.trajectory or []:
            plot_trajectory(TrajectoryRepository.load(path), resolve_map(self.config), self.store.plot_path(path.stem))
        if not metrics and not args.trajectory:
            logger.warning("Nothing to plot: no metrics in %s and no --trajectory given", self.store.out_dir)
