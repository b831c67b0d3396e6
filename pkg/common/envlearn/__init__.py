"""Обучение модели среды: канал по якорям и локализация устройств."""

from common.envlearn.channel_fit import LearnedChannel, MlpPsi, fit_channel, prior_channel
from common.envlearn.localization import (
    LocalizationResult,
    LosLookup,
    grid_search,
    localize,
    localize_all,
    nll,
    nll_batch,
)
from common.envlearn.measurements import DeviceMeasurements, MeasurementSet
from common.envlearn.simulated import build_simulated_env

__all__ = [
    "DeviceMeasurements",
    "LearnedChannel",
    "LocalizationResult",
    "LosLookup",
    "MeasurementSet",
    "MlpPsi",
    "build_simulated_env",
    "fit_channel",
    "grid_search",
    "localize",
    "localize_all",
    "nll",
    "nll_batch",
    "prior_channel",
]
