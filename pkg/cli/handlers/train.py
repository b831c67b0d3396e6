"""Обработчик команды train"""

import argparse
import logging

from cli.handlers.base import BaseHandler
from common.federation import run_algorithm1, run_baseline
from common.plots import plot_performance, plot_trajectory

logger = logging.getLogger(__name__)

ALGORITHMS = ("fedqmix", "ma-qmix", "qmix", "iql")


class TrainHandler(BaseHandler):
    """Обработчик команды train"""

    def handle(self, args: argparse.Namespace) -> None:
        """
        Обучение выбранным алгоритмом.

        Пишет metrics.csv, чекпоинты и график доли собранных данных
        от числа реальных эпизодов.
        """
        algo = args.algo
        logger.info("Training %s, seed %d, output %s", algo, self.config.seed, self.store.out_dir)
        if algo == "fedqmix":
            result = run_algorithm1(self.config, self.store)
        else:
            result = run_baseline(algo, self.config, self.store)

        plot_performance({algo: result.metrics}, self.store.plot_path("performance"))
        if result.state is not None and result.state.last_real_episode is not None:
            trajectory = self.store.trajectories.load(self.store.trajectories.path_for("real_world_last"))
            plot_trajectory(trajectory, result.state.real_env.spec.city, self.store.plot_path("real_world_last"))

        last = result.metrics[-1] if result.metrics else {}
        logger.info("Training finished: %d metrics rows, last collection ratio %s",
                    len(result.metrics), last.get("collection_ratio"))
