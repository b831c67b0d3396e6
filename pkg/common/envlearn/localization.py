"""
Локализация устройств без известной позиции.

Для кандидата (x, y) флаг LoS каждого измерения берётся из растра
видимости позиции БПЛА в клетке кандидата; отрицательное
лог-правдоподобие минимизируется роем частиц (global-best PSO).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from common.envlearn.channel_fit import LearnedChannel, link_geometry
from common.envlearn.measurements import DeviceMeasurements, MeasurementSet
from common.exceptions import InsufficientMeasurementsError
from common.schemas import DeviceSpec
from common.world import CityMap
from config import EnvLearnConfig, PsoConfig

logger = logging.getLogger(__name__)

# Кандидатов за один векторный проход
_CANDIDATE_CHUNK = 1024


@dataclass(frozen=True, slots=True)
class LocalizationResult:
    device_id: int
    x: float
    y: float
    nll: float
    n_meas: int
    low_confidence: bool = False
    error_m: float | None = None

    @property
    def position(self) -> tuple[float, float, float]:
        return self.x, self.y, 0.0

    def with_error(self, true_xy: tuple[float, float]) -> "LocalizationResult":
        error = math.hypot(self.x - true_xy[0], self.y - true_xy[1])
        return LocalizationResult(self.device_id, self.x, self.y, self.nll, self.n_meas, self.low_confidence, error)


class LosLookup:
    """Флаги LoS измерений устройства для любых кандидатов через растры видимости"""

    def __init__(self, meas: DeviceMeasurements, city: CityMap):
        positions = meas.positions()
        index = {pos: n for n, pos in enumerate(positions)}
        self.city = city
        self.rasters = np.stack([city.los_raster(ix, iy, alt) for ix, iy, alt in positions]) if positions \
            else np.zeros((0, city.height_cells, city.width_cells), dtype=bool)
        self.source = np.array(
            [index[(int(ix), int(iy), float(alt))] for (ix, iy), alt in zip(meas.uav_cells.tolist(), meas.altitudes.tolist())],
            dtype=np.int64,
        )

    def omega(self, candidates: np.ndarray) -> np.ndarray:
        """candidates (P, 2) в метрах -> (P, N) флаги LoS"""
        cs = self.city.cell_size_m
        cx = np.clip(np.floor(candidates[:, 0] / cs).astype(np.int64), 0, self.city.width_cells - 1)
        cy = np.clip(np.floor(candidates[:, 1] / cs).astype(np.int64), 0, self.city.height_cells - 1)
        return self.rasters[self.source[None, :], cy[:, None], cx[:, None]]


def _check_nonempty(meas: DeviceMeasurements) -> None:
    if len(meas) == 0:
        raise InsufficientMeasurementsError(f"device {meas.device_id}: no measurements")


def nll_batch(
    meas: DeviceMeasurements,
    candidates: np.ndarray,
    channel: LearnedChannel,
    city: CityMap,
    sigma_floor_db: float = 0.01,
    lookup: LosLookup | None = None,
) -> np.ndarray:
    """
    Отрицательное лог-правдоподобие для набора кандидатов.

    nll = log(sL^2 / sN^2) * sum(w) + sum(w * r^2) / sL^2 + sum((1 - w) * r^2) / sN^2,
    r = g - psi(d, phi, w); sigma прижимаются снизу к sigma_floor_db.

    Returns:
        (P,) значения nll
    """
    _check_nonempty(meas)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    lookup = lookup or LosLookup(meas, city)
    s_los, s_nlos = channel.nll_sigmas(sigma_floor_db)
    log_ratio = math.log(s_los ** 2 / s_nlos ** 2)

    out = np.empty(len(candidates))
    for start in range(0, len(candidates), _CANDIDATE_CHUNK):
        chunk = candidates[start:start + _CANDIDATE_CHUNK]
        p, n = len(chunk), len(meas)
        omega = lookup.omega(chunk)
        uav = np.broadcast_to(meas.uav_xyz[None, :, :], (p, n, 3)).reshape(-1, 3)
        ground = np.broadcast_to(chunk[:, None, :], (p, n, 2)).reshape(-1, 2)
        distance, elevation = link_geometry(uav, ground)
        psi = channel.mean_gain_db(distance, elevation, omega.reshape(-1)).reshape(p, n)
        sq = (meas.gain_db[None, :] - psi) ** 2
        w = omega.astype(np.float64)
        out[start:start + p] = (
            log_ratio * w.sum(axis=1)
            + np.sum(w * sq, axis=1) / s_los ** 2
            + np.sum((1.0 - w) * sq, axis=1) / s_nlos ** 2
        )
    return out


def nll(
    meas: DeviceMeasurements,
    candidate: tuple[float, float],
    channel: LearnedChannel,
    city: CityMap,
    sigma_floor_db: float = 0.01,
) -> float:
    """nll одного кандидата (x, y)."""
    return float(nll_batch(meas, np.array([candidate[:2]]), channel, city, sigma_floor_db)[0])


def cell_centres(city: CityMap) -> np.ndarray:
    iy, ix = np.mgrid[0:city.height_cells, 0:city.width_cells]
    return np.column_stack([(ix.ravel() + 0.5) * city.cell_size_m, (iy.ravel() + 0.5) * city.cell_size_m])


def grid_search(
    meas: DeviceMeasurements,
    channel: LearnedChannel,
    city: CityMap,
    sigma_floor_db: float = 0.01,
    lookup: LosLookup | None = None,
) -> tuple[float, float, float]:
    """Полный перебор центров клеток; возвращает (x, y, nll) лучшего."""
    centres = cell_centres(city)
    values = nll_batch(meas, centres, channel, city, sigma_floor_db, lookup)
    best = int(np.argmin(values))
    return float(centres[best, 0]), float(centres[best, 1]), float(values[best])


def _pso_rng(pso: PsoConfig, device_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([pso.seed, device_id]))


def localize(
    device_id: int,
    measurements: MeasurementSet,
    channel: LearnedChannel,
    city: CityMap,
    pso: PsoConfig,
    cfg: EnvLearnConfig,
    previous: tuple[float, float] | None = None,
) -> LocalizationResult:
    """
    Оценка позиции устройства роем частиц.

    Стартовый рой: равномерно по карте, плюс частица в лучшем центре клетки
    (если pso.grid_seed) и частица в предыдущей оценке. При iterations = 0
    возвращается лучшая стартовая частица. Результат детерминирован при
    фиксированном pso.seed.

    Если измерений меньше cfg.min_measurements, возвращается предыдущая
    оценка (или случайная точка карты) с флагом low_confidence.
    """
    meas = measurements.for_device(device_id, city)
    rng = _pso_rng(pso, device_id)
    bounds = np.array([city.width_m, city.height_m])

    if len(meas) < cfg.min_measurements:
        guess = previous if previous is not None else tuple(rng.uniform(0.0, bounds))
        logger.warning(
            "Device %d: %d measurements (< %d), keeping %s estimate",
            device_id, len(meas), cfg.min_measurements, "previous" if previous is not None else "random",
        )
        return LocalizationResult(device_id, float(guess[0]), float(guess[1]), math.nan, len(meas), low_confidence=True)

    lookup = LosLookup(meas, city)
    floor = cfg.sigma_floor_db

    def evaluate(points: np.ndarray) -> np.ndarray:
        return nll_batch(meas, points, channel, city, floor, lookup)

    x = rng.uniform(0.0, 1.0, size=(pso.particles, 2)) * bounds
    seeded = 0
    if pso.grid_seed:
        gx, gy, _ = grid_search(meas, channel, city, floor, lookup)
        x[seeded] = (gx, gy)
        seeded += 1
    if previous is not None and seeded < pso.particles:
        x[seeded] = np.clip(np.asarray(previous[:2], dtype=np.float64), 0.0, bounds)

    v_max = pso.velocity_clamp * bounds
    v = rng.uniform(-1.0, 1.0, size=x.shape) * v_max
    values = evaluate(x)
    p_best, p_val = x.copy(), values.copy()
    g = int(np.argmin(p_val))
    g_best, g_val = p_best[g].copy(), float(p_val[g])

    for _ in range(pso.iterations):
        r1 = rng.random(x.shape)
        r2 = rng.random(x.shape)
        v = pso.inertia * v + pso.c1 * r1 * (p_best - x) + pso.c2 * r2 * (g_best - x)
        v = np.clip(v, -v_max, v_max)
        x = np.clip(x + v, 0.0, bounds)
        values = evaluate(x)
        improved = values < p_val
        p_best[improved] = x[improved]
        p_val[improved] = values[improved]
        g = int(np.argmin(p_val))
        if p_val[g] < g_val:
            g_best, g_val = p_best[g].copy(), float(p_val[g])

    logger.info("Device %d localized at (%.1f, %.1f), nll %.3f, %d measurements",
                device_id, g_best[0], g_best[1], g_val, len(meas))
    return LocalizationResult(device_id, float(g_best[0]), float(g_best[1]), g_val, len(meas))


def localize_all(
    measurements: MeasurementSet,
    channel: LearnedChannel,
    city: CityMap,
    devices: list[DeviceSpec],
    pso: PsoConfig,
    cfg: EnvLearnConfig,
    previous: dict[int, LocalizationResult] | None = None,
    with_errors: bool = False,
) -> dict[int, LocalizationResult]:
    """
    Локализация всех неякорных устройств из devices.

    Args:
        previous: прошлые оценки, используются как тёплый старт
        with_errors: посчитать ошибку до истинной позиции (только для оценки)
    """
    previous = previous or {}
    results = {}
    for device in sorted(devices, key=lambda d: d.id):
        if device.anchor:
            continue
        prev = previous.get(device.id)
        result = localize(device.id, measurements, channel, city, pso, cfg,
                          previous=(prev.x, prev.y) if prev is not None else None)
        if with_errors:
            result = result.with_error(city.center(*device.cell))
        results[device.id] = result
    return results
