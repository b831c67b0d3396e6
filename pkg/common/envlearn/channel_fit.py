"""
Обучение модели канала psi по измерениям якорных устройств.

Метки LoS/NLoS берутся из карты (позиции якорей известны). Модель по
умолчанию: log-linear регрессия g = beta + alpha * log10(d) отдельно для
каждого класса; вариант mlp: небольшая сеть по (log10 d, phi, omega).
"""

import logging
from dataclasses import dataclass, field
from typing import Literal
try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

import numpy as np

from common.channel import REFERENCE_DISTANCE_M
from common.envlearn.measurements import MeasurementSet
from common.exceptions import InsufficientMeasurementsError
from common.nn import (
    AdamState,
    ParamLayout,
    ParamVector,
    adam_update,
    flatten_grads,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
)
from common.schemas import DeviceSpec
from common.world import CityMap, los_many
from config import ChannelParams, EnvLearnConfig

logger = logging.getLogger(__name__)

# Минимум точек для подгонки прямой в одном классе
MIN_CLASS_SAMPLES = 2


def link_geometry(uav_xyz: np.ndarray, ground_xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Расстояние и угол места для пар БПЛА (N, 3) и наземных точек (N, 2)."""
    delta_xy = uav_xyz[:, :2] - ground_xy
    distance = np.sqrt(np.sum(delta_xy ** 2, axis=1) + uav_xyz[:, 2] ** 2)
    elevation = np.arcsin(np.clip(uav_xyz[:, 2] / np.maximum(distance, REFERENCE_DISTANCE_M), 0.0, 1.0))
    return distance, elevation


class MlpPsi:
    """psi(log10 d, phi, omega): один скрытый слой ReLU, нормированные входы и выход"""

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.layout = ParamLayout.from_shapes({
            "fc1.weight": (hidden, 3),
            "fc1.bias": (hidden,),
            "fc2.weight": (1, hidden),
            "fc2.bias": (1,),
        })
        self.params = ParamVector(self.layout)
        views = self.params.views()
        views["fc1.weight"][...] = rng.uniform(-1.0 / np.sqrt(3), 1.0 / np.sqrt(3), size=(hidden, 3))
        views["fc1.bias"][...] = rng.uniform(-1.0 / np.sqrt(3), 1.0 / np.sqrt(3), size=hidden)
        views["fc2.weight"][...] = rng.uniform(-1.0 / np.sqrt(hidden), 1.0 / np.sqrt(hidden), size=(1, hidden))
        self.x_mean = np.zeros(3)
        self.x_std = np.ones(3)
        self.y_mean = 0.0
        self.y_std = 1.0

    @staticmethod
    def features(distance: np.ndarray, elevation: np.ndarray, los: np.ndarray) -> np.ndarray:
        d = np.maximum(np.asarray(distance, dtype=np.float64), REFERENCE_DISTANCE_M)
        return np.stack(
            np.broadcast_arrays(np.log10(d), np.asarray(elevation, dtype=np.float64), np.asarray(los, dtype=np.float64)),
            axis=-1,
        )

    def _forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = self.params.views()
        pre = linear_forward(p["fc1.weight"], p["fc1.bias"], x)
        hidden = relu_forward(pre)
        return linear_forward(p["fc2.weight"], p["fc2.bias"], hidden)[..., 0], pre, hidden

    def predict(self, distance: np.ndarray, elevation: np.ndarray, los: np.ndarray) -> np.ndarray:
        x = (self.features(distance, elevation, los) - self.x_mean) / self.x_std
        shape = x.shape[:-1]
        y, _, _ = self._forward(x.reshape(-1, 3))
        return (y * self.y_std + self.y_mean).reshape(shape)

    def fit(self, features: np.ndarray, target: np.ndarray, epochs: int, learning_rate: float) -> float:
        """Полнобатчевый Adam по среднему квадрату ошибки; возвращает финальный MSE (в нормированных единицах)."""
        self.x_mean = features.mean(axis=0)
        self.x_std = np.where(features.std(axis=0) > 0, features.std(axis=0), 1.0)
        self.y_mean = float(target.mean())
        self.y_std = float(target.std()) or 1.0
        x = (features - self.x_mean) / self.x_std
        y = (target - self.y_mean) / self.y_std

        adam = AdamState.zeros(self.layout.size, learning_rate)
        n = len(y)
        mse = float("nan")
        for _ in range(epochs):
            p = self.params.views()
            out, pre, hidden = self._forward(x)
            err = out - y
            mse = float(np.mean(err ** 2))
            dout = (2.0 / n) * err[:, None]
            dhidden, dw2, db2 = linear_backward(p["fc2.weight"], hidden, dout)
            _, dw1, db1 = linear_backward(p["fc1.weight"], x, relu_backward(pre, dhidden))
            grads = flatten_grads(self.layout, {"fc1.weight": dw1, "fc1.bias": db1, "fc2.weight": dw2, "fc2.bias": db2})
            adam_update(self.params, grads, adam)
        return mse


@dataclass(frozen=True, eq=False)
class LearnedChannel:
    """
    Выученный канал, реализует RadioModel.

    sigma_* хранятся как есть (на бесшумных данных могут быть нулём);
    нижняя граница применяется только в функции правдоподобия.
    """

    alpha_los: float
    beta_los: float
    alpha_nlos: float
    beta_nlos: float
    sigma_los: float
    sigma_nlos: float
    model: Literal["loglinear", "mlp"] = "loglinear"
    n_los: int = 0
    n_nlos: int = 0
    flags: tuple[str, ...] = ()
    mlp: MlpPsi | None = field(default=None, repr=False)

    @classmethod
    def from_params(cls, params: ChannelParams, flags: tuple[str, ...] = ()) -> Self:
        return cls(
            alpha_los=params.alpha_los,
            beta_los=params.beta_los,
            alpha_nlos=params.alpha_nlos,
            beta_nlos=params.beta_nlos,
            sigma_los=params.sigma_los,
            sigma_nlos=params.sigma_nlos,
            flags=flags,
        )

    @property
    def low_confidence(self) -> bool:
        return bool(self.flags)

    def mean_gain_db(self, distance_m, elevation_rad, los) -> np.ndarray:
        if self.mlp is not None:
            return self.mlp.predict(distance_m, elevation_rad, los)
        d = np.maximum(np.asarray(distance_m, dtype=np.float64), REFERENCE_DISTANCE_M)
        los = np.asarray(los, dtype=bool)
        alpha = np.where(los, self.alpha_los, self.alpha_nlos)
        beta = np.where(los, self.beta_los, self.beta_nlos)
        return beta + alpha * np.log10(d)

    def shadowing_std(self, los: bool) -> float:
        return self.sigma_los if los else self.sigma_nlos

    def nll_sigmas(self, floor_db: float) -> tuple[float, float]:
        return max(self.sigma_los, floor_db), max(self.sigma_nlos, floor_db)

    def summary(self) -> dict:
        return {
            "model": self.model,
            "alpha_los": self.alpha_los,
            "beta_los": self.beta_los,
            "sigma_los": self.sigma_los,
            "alpha_nlos": self.alpha_nlos,
            "beta_nlos": self.beta_nlos,
            "sigma_nlos": self.sigma_nlos,
            "n_los": self.n_los,
            "n_nlos": self.n_nlos,
            "flags": list(self.flags),
        }


def _loglinear(distance: np.ndarray, gain: np.ndarray) -> tuple[float, float, float]:
    """МНК g = beta + alpha * log10(d); возвращает (alpha, beta, sigma) с sigma по n - 2 степеням свободы."""
    x = np.column_stack([np.ones_like(distance), np.log10(np.maximum(distance, REFERENCE_DISTANCE_M))])
    coef, *_ = np.linalg.lstsq(x, gain, rcond=None)
    residual = gain - x @ coef
    dof = max(len(gain) - 2, 1)
    return float(coef[1]), float(coef[0]), float(np.sqrt(np.sum(residual ** 2) / dof))


def anchor_samples(
    measurements: MeasurementSet, anchors: list[DeviceSpec], city: CityMap
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(distance, elevation, los, gain) по всем измерениям якорей."""
    cells = {d.id: d.cell for d in anchors}
    records = [r for r in measurements if r.device_id in cells]
    if not records:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool), np.zeros(0)
    uav = np.array([city.xyz(r.uav_pos) for r in records])
    ground = np.array([city.center(*cells[r.device_id]) for r in records])
    los = los_many(city, uav, np.column_stack([ground, np.zeros(len(records))]))
    distance, elevation = link_geometry(uav, ground)
    gain = np.array([r.gain_db for r in records])
    return distance, elevation, los, gain


def fit_channel(
    measurements: MeasurementSet,
    anchors: list[DeviceSpec],
    city: CityMap,
    cfg: EnvLearnConfig,
    rng: np.random.Generator | None = None,
) -> LearnedChannel:
    """
    Подгонка psi и sigma по измерениям якорей.

    Если один из классов LoS/NLoS не представлен, подгоняется только
    доступный, его sigma копируется в другой, а psi отсутствующего класса
    берётся из априорного канала; результат помечается флагом.

    Raises:
        InsufficientMeasurementsError: меньше cfg.min_samples измерений
            якорей или ни один класс не набрал двух точек
    """
    distance, elevation, los, gain = anchor_samples(measurements, anchors, city)
    if len(gain) < cfg.min_samples:
        raise InsufficientMeasurementsError(
            f"fit_channel: {len(gain)} anchor measurements, need at least {cfg.min_samples}"
        )

    n_los, n_nlos = int(los.sum()), int((~los).sum())
    has_los, has_nlos = n_los >= MIN_CLASS_SAMPLES, n_nlos >= MIN_CLASS_SAMPLES
    if not has_los and not has_nlos:
        raise InsufficientMeasurementsError("fit_channel: neither LoS nor NLoS class has enough samples")

    prior = cfg.prior
    flags: list[str] = []
    if has_los:
        a_los, b_los, s_los = _loglinear(distance[los], gain[los])
    if has_nlos:
        a_nlos, b_nlos, s_nlos = _loglinear(distance[~los], gain[~los])
    if not has_los:
        a_los, b_los, s_los = prior.alpha_los, prior.beta_los, s_nlos
        flags.append("los_missing")
    if not has_nlos:
        a_nlos, b_nlos, s_nlos = prior.alpha_nlos, prior.beta_nlos, s_los
        flags.append("nlos_missing")
    if flags:
        logger.warning("Channel fit with a single LoS class (%s); sigma copied across classes", ", ".join(flags))

    mlp = None
    if cfg.model == "mlp":
        mlp = MlpPsi(cfg.mlp_hidden, rng if rng is not None else np.random.default_rng(0))
        features = MlpPsi.features(distance, elevation, los)
        mse = mlp.fit(features, gain, cfg.mlp_epochs, cfg.mlp_learning_rate)
        residual = gain - mlp.predict(distance, elevation, los)
        if has_los:
            s_los = float(np.sqrt(np.mean(residual[los] ** 2)))
        if has_nlos:
            s_nlos = float(np.sqrt(np.mean(residual[~los] ** 2)))
        if not has_los:
            s_los = s_nlos
        if not has_nlos:
            s_nlos = s_los
        logger.info("MLP channel trained: normalized MSE %.4f", mse)

    channel = LearnedChannel(
        alpha_los=a_los, beta_los=b_los, alpha_nlos=a_nlos, beta_nlos=b_nlos,
        sigma_los=s_los, sigma_nlos=s_nlos,
        model=cfg.model, n_los=n_los, n_nlos=n_nlos, flags=tuple(flags), mlp=mlp,
    )
    logger.info(
        "Channel fitted on %d samples: LoS a=%.2f b=%.2f s=%.2f (%d), NLoS a=%.2f b=%.2f s=%.2f (%d)",
        len(gain), a_los, b_los, s_los, n_los, a_nlos, b_nlos, s_nlos, n_nlos,
    )
    return channel


def prior_channel(cfg: EnvLearnConfig) -> LearnedChannel:
    """Априорный канал до накопления измерений якорей."""
    return LearnedChannel.from_params(cfg.prior, flags=("prior",))
