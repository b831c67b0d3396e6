"""
3D карта города.

Предоставляет:
- CityMap: растр высот зданий, стартовая и терминальная клетки
- load_map() / save_map(): JSON формат карты
- is_los() / los_many() / los_raster(): прямая видимость (трассировка луча)
- distance_field(): BFS-расстояния до терминала на заданной высоте
"""

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from common.cache import cached
from common.exceptions import ConfigError, MapFormatError
from common.schemas import DeviceSpec, MapFile, UavSpec

logger = logging.getLogger(__name__)

# Маркер недостижимой клетки в DistanceField
UNREACHABLE = np.iinfo(np.int64).max

# Сэмплов трассировки на одну клетку
LOS_SAMPLES_PER_CELL = 10

# Ограничение памяти векторной трассировки (отрезков за проход)
_LOS_CHUNK = 256

_NEIGHBOURS = ((0, 1), (-1, 0), (0, -1), (1, 0))


@dataclass(frozen=True, slots=True)
class GridPos:
    """Позиция на сетке: клетка + высота (0 для устройств)"""

    ix: int
    iy: int
    altitude_m: float = 0.0


@dataclass(frozen=True, eq=False)
class CityMap:
    """
    Растровая карта высот.

    heights_m индексируется как [iy, ix]; метрические координаты центра
    клетки: x = (ix + 0.5) * cell_size_m.
    """

    cell_size_m: float
    heights_m: np.ndarray
    start_cell: tuple[int, int]
    terminal_cell: tuple[int, int]
    devices: tuple[DeviceSpec, ...] = field(default=())
    uavs: tuple[UavSpec, ...] = field(default=())

    def __post_init__(self):
        heights = np.array(self.heights_m, dtype=np.float64)
        heights.setflags(write=False)
        object.__setattr__(self, "heights_m", heights)
        object.__setattr__(self, "start_cell", tuple(int(v) for v in self.start_cell))
        object.__setattr__(self, "terminal_cell", tuple(int(v) for v in self.terminal_cell))
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "uavs", tuple(self.uavs))
        _validate(self)

    @property
    def width_cells(self) -> int:
        return self.heights_m.shape[1]

    @property
    def height_cells(self) -> int:
        return self.heights_m.shape[0]

    @property
    def width_m(self) -> float:
        return self.width_cells * self.cell_size_m

    @property
    def height_m(self) -> float:
        return self.height_cells * self.cell_size_m

    @property
    def diagonal_m(self) -> float:
        return math.hypot(self.width_m, self.height_m)

    @property
    def los_step_m(self) -> float:
        return self.cell_size_m / LOS_SAMPLES_PER_CELL

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width_cells and 0 <= iy < self.height_cells

    def flyable(self, ix: int, iy: int, altitude_m: float) -> bool:
        """Клетка в границах и здание в ней ниже высоты полёта."""
        return self.in_bounds(ix, iy) and self.heights_m[iy, ix] < altitude_m

    def center(self, ix: int, iy: int) -> tuple[float, float]:
        return (ix + 0.5) * self.cell_size_m, (iy + 0.5) * self.cell_size_m

    def xyz(self, pos: GridPos) -> np.ndarray:
        x, y = self.center(pos.ix, pos.iy)
        return np.array([x, y, pos.altitude_m], dtype=np.float64)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Клетка, содержащая метрическую точку (с прижатием к границам)."""
        ix = min(max(int(math.floor(x / self.cell_size_m)), 0), self.width_cells - 1)
        iy = min(max(int(math.floor(y / self.cell_size_m)), 0), self.height_cells - 1)
        return ix, iy

    @cached(key="field:{altitude_m}")
    def distance_field(self, altitude_m: float) -> "DistanceField":
        return distance_field(self, altitude_m)

    @cached(key="raster:{ix}:{iy}:{altitude_m}")
    def los_raster(self, ix: int, iy: int, altitude_m: float) -> np.ndarray:
        return los_raster(self, GridPos(ix, iy, altitude_m))


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Число шагов до терминала по 4-связной сетке на заданной высоте"""

    altitude_m: float
    steps_to_terminal: np.ndarray

    def at(self, ix: int, iy: int) -> int:
        return int(self.steps_to_terminal[iy, ix])

    def reachable(self, ix: int, iy: int) -> bool:
        return self.steps_to_terminal[iy, ix] != UNREACHABLE


def _validate(city: CityMap) -> None:
    if city.heights_m.ndim != 2 or city.heights_m.size == 0:
        raise MapFormatError("heights_m: expected a non-empty 2D array")
    if city.cell_size_m <= 0:
        raise MapFormatError("cell_size_m: must be positive")
    if np.any(city.heights_m < 0) or not np.all(np.isfinite(city.heights_m)):
        iy, ix = np.argwhere(~(city.heights_m >= 0))[0]
        raise MapFormatError(f"heights_m[{iy}][{ix}]: heights must be finite and >= 0")
    for name, cell in (("start_cell", city.start_cell), ("terminal_cell", city.terminal_cell)):
        if not city.in_bounds(*cell):
            raise MapFormatError(f"{name}: {list(cell)} outside {city.width_cells}x{city.height_cells} grid")
    for i, device in enumerate(city.devices):
        if not city.in_bounds(*device.cell):
            raise MapFormatError(f"devices[{i}].cell: {list(device.cell)} outside the grid")
    ids = [d.id for d in city.devices]
    if len(set(ids)) != len(ids):
        raise MapFormatError("devices: ids must be unique")


def load_map(path: str | Path) -> CityMap:
    """
    Загрузка карты из JSON.

    Raises:
        MapFormatError: битый JSON, несовпадение размеров, клетки вне сетки
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MapFormatError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}") from e
    except OSError as e:
        raise MapFormatError(f"{path}: {e.strerror}") from e

    try:
        parsed = MapFile.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise MapFormatError(f"{path}: {loc}: {first['msg']}") from e

    width = raw.get("width_cells", len(parsed.heights_m[0]) if parsed.heights_m else 0)
    height = raw.get("height_cells", len(parsed.heights_m))
    if len(parsed.heights_m) != height:
        raise MapFormatError(f"{path}: heights_m has {len(parsed.heights_m)} rows, expected {height}")
    for iy, row in enumerate(parsed.heights_m):
        if len(row) != width:
            raise MapFormatError(f"{path}: heights_m[{iy}] has {len(row)} entries, expected {width}")

    try:
        city = CityMap(
            cell_size_m=parsed.cell_size_m,
            heights_m=np.array(parsed.heights_m, dtype=np.float64),
            start_cell=parsed.start_cell,
            terminal_cell=parsed.terminal_cell,
            devices=tuple(parsed.devices),
            uavs=tuple(parsed.uavs),
        )
    except MapFormatError as e:
        raise MapFormatError(f"{path}: {e}") from e

    logger.debug(f"Map loaded: {path} ({city.width_cells}x{city.height_cells} cells)")
    return city


def save_map(city: CityMap, path: str | Path) -> None:
    """Сохранение карты; load_map(save_map(m)) восстанавливает m бит в бит."""
    data = {
        "cell_size_m": city.cell_size_m,
        "width_cells": city.width_cells,
        "height_cells": city.height_cells,
        "heights_m": city.heights_m.tolist(),
        "start_cell": list(city.start_cell),
        "terminal_cell": list(city.terminal_cell),
        "devices": [d.model_dump(mode="json") for d in city.devices],
        "uavs": [u.model_dump(mode="json") for u in city.uavs],
    }
    Path(path).write_text(json.dumps(data), encoding="utf-8")


def los_many(city: CityMap, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Прямая видимость для набора отрезков в метрических координатах.

    Отрезок сэмплируется с шагом cell_size_m / 10; во всех внутренних
    сэмплах высота отрезка должна быть строго выше здания в клетке под ним.
    Концы упорядочиваются лексикографически, так что результат симметричен.

    Args:
        a, b: массивы формы (N, 3)

    Returns:
        Булев массив формы (N,)
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))

    swap = np.zeros(len(a), dtype=bool)
    decided = np.zeros(len(a), dtype=bool)
    for axis in range(3):
        diff = a[:, axis] != b[:, axis]
        swap |= ~decided & diff & (a[:, axis] > b[:, axis])
        decided |= diff
    lo = np.where(swap[:, None], b, a)
    hi = np.where(swap[:, None], a, b)

    delta = hi - lo
    length = np.linalg.norm(delta, axis=1)
    n = np.maximum(np.ceil(length / city.los_step_m), 1).astype(np.int64)

    out = np.ones(len(a), dtype=bool)
    heights = city.heights_m
    cs = city.cell_size_m
    for start in range(0, len(a), _LOS_CHUNK):
        sl = slice(start, start + _LOS_CHUNK)
        n_chunk = n[sl]
        n_max = int(n_chunk.max())
        if n_max <= 1:
            continue
        j = np.arange(1, n_max, dtype=np.float64)
        s = j[None, :] / n_chunk[:, None]
        valid = j[None, :] < n_chunk[:, None]
        pts = lo[sl, None, :] + s[..., None] * delta[sl, None, :]
        ix = np.clip(np.floor(pts[..., 0] / cs).astype(np.int64), 0, city.width_cells - 1)
        iy = np.clip(np.floor(pts[..., 1] / cs).astype(np.int64), 0, city.height_cells - 1)
        clear = pts[..., 2] > heights[iy, ix]
        out[sl] = np.all(clear | ~valid, axis=1)
    return out


def is_los(city: CityMap, a: GridPos, b: GridPos) -> bool:
    """Прямая видимость между центрами клеток двух позиций."""
    return bool(los_many(city, city.xyz(a)[None, :], city.xyz(b)[None, :])[0])


def los_raster(city: CityMap, uav: GridPos) -> np.ndarray:
    """Видимость из позиции БПЛА до центра каждой наземной клетки, форма (H, W)."""
    iy, ix = np.mgrid[0:city.height_cells, 0:city.width_cells]
    ground = np.stack(
        [(ix.ravel() + 0.5) * city.cell_size_m, (iy.ravel() + 0.5) * city.cell_size_m, np.zeros(ix.size)],
        axis=1,
    )
    origin = np.broadcast_to(city.xyz(uav), ground.shape)
    return los_many(city, origin, ground).reshape(city.height_cells, city.width_cells)


def distance_field(city: CityMap, altitude_m: float) -> DistanceField:
    """
    BFS от терминала по 4-соседям через клетки ниже высоты полёта.

    Raises:
        ConfigError: терминальная клетка заблокирована на этой высоте
    """
    if altitude_m <= 0:
        raise ConfigError(f"altitude_m: must be positive, got {altitude_m}")
    tx, ty = city.terminal_cell
    if not city.flyable(tx, ty, altitude_m):
        raise ConfigError(f"terminal_cell {[tx, ty]} is blocked at altitude {altitude_m} m")

    steps = np.full((city.height_cells, city.width_cells), UNREACHABLE, dtype=np.int64)
    steps[ty, tx] = 0
    queue = deque([(tx, ty)])
    while queue:
        x, y = queue.popleft()
        for dx, dy in _NEIGHBOURS:
            nx, ny = x + dx, y + dy
            if city.flyable(nx, ny, altitude_m) and steps[ny, nx] == UNREACHABLE:
                steps[ny, nx] = steps[y, x] + 1
                queue.append((nx, ny))

    steps.setflags(write=False)
    return DistanceField(altitude_m=altitude_m, steps_to_terminal=steps)
