"""Обработчик команды eval"""

import argparse
import logging

from cli.handlers.base import BaseHandler
from common.env import HarvestEnv
from common.federation import make_learner
from common.learner import greedy_rollout, trajectory_document
from common.plots import plot_trajectory
from common.scenarios import real_env_spec
from common.seeding import make_rng

logger = logging.getLogger(__name__)


class EvalHandler(BaseHandler):
    """Обработчик команды eval"""

    def handle(self, args: argparse.Namespace) -> None:
        """
        Жадный прогон чекпоинта в эталонной среде.

        Экспортирует траекторию в JSON и рисует вид сверху по
        перезагруженному JSON, чтобы рендер совпадал с командой plot.
        """
        env = HarvestEnv(real_env_spec(self.config))
        mode = args.algo if args.algo == "iql" else None
        learner = make_learner(self.config, env, mode=mode)

        path = args.checkpoint or self.store.checkpoints.final_path
        params = self.store.checkpoints.load(path, expected=learner.fingerprint())
        learner.load_params(params, sync_target=True)

        result = greedy_rollout(learner, env, make_rng(self.config.seed, "eval"))
        estimates = []
        if self.store.localization.path.exists():
            estimates = [
                (int(row["device_id"]), float(row["x_hat"]), float(row["y_hat"]))
                for row in self.store.localization.read()
            ]

        saved = self.store.trajectories.save("eval", trajectory_document(env, result, estimates))
        plot_trajectory(self.store.trajectories.load(saved), env.spec.city, self.store.plot_path("eval"))
        logger.info("Evaluation of %s: collection ratio %.4f in %d steps", path, result.collection_ratio, result.steps)
        print(f"collection_ratio={result.collection_ratio!r}")
