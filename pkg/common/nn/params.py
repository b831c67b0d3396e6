"""
Плоский вектор параметров.

Все тензоры сети живут в одном непрерывном буфере float64; сети получают
view на его куски, поэтому обновление вектора сразу видно в слоях.
Формат бинарного блоба:
    b"PVEC" | uint16 версия | uint32 длина заголовка | JSON-заголовок | float64 LE
"""

import json
import struct
from dataclasses import dataclass
from typing import Any
try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

import numpy as np
import numpy.typing as npt

from common.exceptions import CheckpointMismatchError, LayoutMismatchError

MAGIC = b"PVEC"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")


@dataclass(frozen=True, slots=True)
class ParamLayout:
    """Упорядоченный список (имя, форма)."""

    entries: tuple[tuple[str, tuple[int, ...]], ...]

    @classmethod
    def from_shapes(cls, shapes: dict[str, tuple[int, ...]]) -> Self:
        return cls(tuple((name, tuple(int(s) for s in shape)) for name, shape in shapes.items()))

    @property
    def size(self) -> int:
        return sum(int(np.prod(shape, dtype=np.int64)) for _, shape in self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def offsets(self) -> dict[str, tuple[int, int, tuple[int, ...]]]:
        result, cursor = {}, 0
        for name, shape in self.entries:
            count = int(np.prod(shape, dtype=np.int64))
            result[name] = (cursor, cursor + count, shape)
            cursor += count
        return result

    def prefixed(self, prefix: str) -> "ParamLayout":
        return ParamLayout(tuple((f"{prefix}.{name}", shape) for name, shape in self.entries))

    def concat(self, other: "ParamLayout") -> "ParamLayout":
        return ParamLayout(self.entries + other.entries)

    def to_json(self) -> list[list[Any]]:
        return [[name, list(shape)] for name, shape in self.entries]

    @classmethod
    def from_json(cls, raw: list[list[Any]]) -> Self:
        return cls(tuple((str(name), tuple(int(s) for s in shape)) for name, shape in raw))


class ParamVector:
    """Значения + layout."""

    def __init__(self, layout: ParamLayout, values: npt.NDArray[np.float64] | None = None):
        self.layout = layout
        if values is None:
            values = np.zeros(layout.size)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (layout.size,):
            raise LayoutMismatchError(f"vector of length {values.shape} does not fit layout of size {layout.size}")
        self.values = values

    def __len__(self) -> int:
        return self.layout.size

    def views(self) -> dict[str, npt.NDArray[np.float64]]:
        return {
            name: self.values[start:stop].reshape(shape)
            for name, (start, stop, shape) in self.layout.offsets().items()
        }

    def subset(self, prefix: str) -> dict[str, npt.NDArray[np.float64]]:
        """View на параметры с именами prefix.*, без префикса."""
        head = f"{prefix}."
        return {name[len(head):]: view for name, view in self.views().items() if name.startswith(head)}

    def copy(self) -> "ParamVector":
        return ParamVector(self.layout, self.values.copy())

    def assign(self, other: "ParamVector") -> None:
        """Копирует значения на место, сохраняя существующие view."""
        check_same_layout(self.layout, other.layout)
        self.values[:] = other.values

    @classmethod
    def from_arrays(cls, layout: ParamLayout, arrays: dict[str, npt.NDArray[np.float64]]) -> Self:
        vector = cls(layout)
        views = vector.views()
        for name, _ in layout.entries:
            if name not in arrays:
                raise LayoutMismatchError(f"missing tensor {name}")
            if np.shape(arrays[name]) != views[name].shape:
                raise LayoutMismatchError(f"tensor {name}: {np.shape(arrays[name])} != {views[name].shape}")
            views[name][...] = arrays[name]
        return vector

    def to_bytes(self, meta: dict[str, Any] | None = None) -> bytes:
        header = json.dumps({"layout": self.layout.to_json(), "meta": meta or {}}, sort_keys=True).encode()
        body = self.values.astype("<f8").tobytes()
        return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)) + header + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> tuple[Self, dict[str, Any]]:
        if len(blob) < _PREFIX.size:
            raise CheckpointMismatchError("parameter blob is truncated")
        magic, version, header_len = _PREFIX.unpack_from(blob)
        if magic != MAGIC:
            raise CheckpointMismatchError("not a parameter blob")
        if version != FORMAT_VERSION:
            raise CheckpointMismatchError(f"unsupported parameter blob version {version}")
        start = _PREFIX.size
        header = json.loads(blob[start:start + header_len])
        layout = ParamLayout.from_json(header["layout"])
        body = blob[start + header_len:]
        if len(body) != 8 * layout.size:
            raise CheckpointMismatchError(f"blob body has {len(body)} bytes, layout needs {8 * layout.size}")
        values = np.frombuffer(body, dtype="<f8").astype(np.float64)
        return cls(layout, values), header.get("meta", {})


def check_same_layout(a: ParamLayout, b: ParamLayout) -> None:
    if a != b:
        raise LayoutMismatchError(f"layouts differ: {a.names[:3]}... ({a.size}) vs {b.names[:3]}... ({b.size})")


def flatten_grads(layout: ParamLayout, grads: dict[str, npt.NDArray[np.float64]]) -> npt.NDArray[np.float64]:
    """Градиенты по именам → плоский вектор; отсутствующие считаются нулевыми."""
    flat = np.zeros(layout.size)
    for name, (start, stop, shape) in layout.offsets().items():
        if name in grads:
            flat[start:stop] = np.asarray(grads[name]).reshape(-1)
    return flat
