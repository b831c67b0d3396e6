"""
Схемы объектов, которые объявляются в файлах карт и конфигов.

Используются и при загрузке карты, и в конфиге эксперимента.
"""

from pydantic import BaseModel, ConfigDict, Field


class DeviceSpec(BaseModel):
    """Наземное IoT-устройство"""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0, description="Device id")
    cell: tuple[int, int] = Field(..., description="Grid cell (ix, iy)")
    data_init: float = Field(..., ge=0, description="Initial data units in the buffer")
    anchor: bool = Field(default=False, description="Position known a priori")


class UavSpec(BaseModel):
    """БПЛА: фиксированная высота полёта и начальный заряд"""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0, description="UAV id")
    altitude_m: float = Field(..., gt=0, description="Flight altitude in meters")
    battery_init: float = Field(..., gt=0, description="Initial battery units")


class MapFile(BaseModel):
    """Формат JSON-файла карты"""

    cell_size_m: float = Field(..., gt=0)
    heights_m: list[list[float]]
    start_cell: tuple[int, int]
    terminal_cell: tuple[int, int]
    devices: list[DeviceSpec] = Field(default_factory=list)
    uavs: list[UavSpec] = Field(default_factory=list)
