"""
Эталонная модель радиоканала.

g = beta_z + alpha_z * log10(d) + eta_z, eta_z ~ N(0, sigma_z^2), z ∈ {LoS, NLoS}
SNR = P * 10^(0.1 g) / sigma^2, R = log2(1 + SNR)
"""

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from common.world import CityMap, GridPos, is_los
from config import ChannelParams

# Опорное расстояние d0, м
REFERENCE_DISTANCE_M = 1.0


class RadioModel(Protocol):
    """Модель средних потерь + затенения (эталонная или выученная)."""

    def mean_gain_db(self, distance_m: np.ndarray, elevation_rad: np.ndarray, los: np.ndarray) -> np.ndarray:
        ...

    def shadowing_std(self, los: bool) -> float:
        ...


@dataclass(frozen=True, slots=True)
class LinkSample:
    """Реализация канала на один слот"""

    gain_db: float
    los: bool
    snr: float
    rate: float


def gain_db(params: ChannelParams, distance_m: float, los: bool, shadowing_db: float = 0.0) -> float:
    """Усиление канала в дБ; расстояние прижимается к d0 = 1 м."""
    d = max(distance_m, REFERENCE_DISTANCE_M)
    if los:
        return params.beta_los + params.alpha_los * math.log10(d) + shadowing_db
    return params.beta_nlos + params.alpha_nlos * math.log10(d) + shadowing_db


def snr_from_gain(params: ChannelParams, gain: float) -> float:
    return params.tx_power_w * 10.0 ** (0.1 * gain) / params.noise_power_w


def rate_from_snr(snr: float) -> float:
    return math.log2(1.0 + snr)


def link_from_gain(params: ChannelParams, gain: float, los: bool) -> LinkSample:
    snr = snr_from_gain(params, gain)
    return LinkSample(gain_db=gain, los=los, snr=snr, rate=rate_from_snr(snr))


def reachable(sample: LinkSample, params: ChannelParams) -> bool:
    """Связь есть при SNR >= порога."""
    return sample.snr >= params.snr_threshold


class GroundTruthRadio:
    """Эталонный канал как RadioModel."""

    def __init__(self, params: ChannelParams):
        self.params = params

    def mean_gain_db(self, distance_m, elevation_rad, los):
        d = np.maximum(np.asarray(distance_m, dtype=np.float64), REFERENCE_DISTANCE_M)
        los = np.asarray(los, dtype=bool)
        alpha = np.where(los, self.params.alpha_los, self.params.alpha_nlos)
        beta = np.where(los, self.params.beta_los, self.params.beta_nlos)
        return beta + alpha * np.log10(d)

    def shadowing_std(self, los: bool) -> float:
        return self.params.sigma_los if los else self.params.sigma_nlos


def geometry(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Расстояние и угол места между двумя точками (x, y, z)."""
    delta = a - b
    distance = float(np.linalg.norm(delta))
    d = max(distance, REFERENCE_DISTANCE_M)
    elevation = math.asin(min(abs(delta[2]) / d, 1.0))
    return distance, elevation


def sample_link(
    params: ChannelParams,
    uav: GridPos,
    device: GridPos,
    city: CityMap,
    rng: np.random.Generator,
    radio: RadioModel | None = None,
    los: bool | None = None,
) -> LinkSample:
    """
    Сэмпл канала между двумя позициями.

    Затенение всегда тянется из rng (даже при sigma = 0), поэтому поток
    случайных чисел не зависит от параметров.

    Args:
        radio: Модель средних потерь; по умолчанию эталонная по params
        los: Готовый флаг видимости (иначе трассировка по карте)
    """
    radio = radio or GroundTruthRadio(params)
    if los is None:
        los = is_los(city, uav, device)
    distance, elevation = geometry(city.xyz(uav), city.xyz(device))
    mean = float(radio.mean_gain_db(distance, elevation, los))
    shadowing = rng.normal(0.0, 1.0) * radio.shadowing_std(los)
    return link_from_gain(params, mean + shadowing, los)
