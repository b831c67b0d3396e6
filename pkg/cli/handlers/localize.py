"""Обработчик команды localize"""

import argparse
import logging

from cli.handlers.base import BaseHandler
from common.envlearn import fit_channel, localize_all
from common.exceptions import InsufficientMeasurementsError
from common.scenarios import real_env_spec
from common.seeding import make_rng
from common.storage.repositories import MeasurementRepository

logger = logging.getLogger(__name__)


class LocalizeHandler(BaseHandler):
    """Обработчик команды localize"""

    def handle(self, args: argparse.Namespace) -> None:
        """
        Подгонка канала по якорям и локализация остальных устройств
        по CSV измерений; отчёт пишется в localization.csv.

        Raises:
            InsufficientMeasurementsError: CSV пуст или якорных измерений мало
        """
        source = args.measurements or self.store.measurements.path
        measurements = MeasurementRepository.read_path(source)
        if len(measurements) == 0:
            raise InsufficientMeasurementsError(f"{source}: no measurements")

        spec = real_env_spec(self.config)
        anchors = [d for d in spec.devices if d.anchor]
        channel = fit_channel(
            measurements, anchors, spec.city, self.config.envlearn, rng=make_rng(self.config.seed, "pso")
        )
        results = localize_all(
            measurements, channel, spec.city, list(spec.devices), self.config.pso, self.config.envlearn,
            with_errors=True,
        )
        for r in results.values():
            logger.info("Device %d: (%.1f, %.1f) m, nll %.3f, %d measurements, error %.2f m",
                        r.device_id, r.x, r.y, r.nll, r.n_meas, r.error_m)
        path = self.store.localization.write(results.values())
        logger.info("Localization report written: %s", path)
