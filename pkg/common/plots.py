"""
SVG-графики: сравнение алгоритмов и траектории.

Рендер через Agg без внешних сервисов; svg.hashsalt и пустая дата в
метаданных дают побайтно одинаковые файлы при повторном рендере.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import to_hex  # noqa: E402

from common.storage.repositories import MetricsRepository  # noqa: E402
from common.world import CityMap  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "uav-fedqmix"

# Цвет отрезка без сбора данных
IDLE_COLOR = "black"


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Plot written: %s", path)
    return path


def plot_performance(runs: dict[str, list[dict]], path: Path) -> Path:
    """
    Доля собранных данных от числа реальных эпизодов (логарифмическая ось x).

    Args:
        runs: имя кривой -> строки метрик
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, rows in runs.items():
        x = [float(r["real_world_episodes"]) for r in rows]
        y = [float(r["collection_ratio"]) for r in rows]
        ax.plot(x, y, label=name, linewidth=1.2)
    ax.set_xscale("log")
    ax.set_xlabel("Real-world training episodes")
    ax.set_ylabel("Collection ratio")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, which="both", alpha=0.3)
    if runs:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def _device_colors(device_ids: list[int]) -> dict[int, str]:
    cmap = plt.get_cmap("tab10")
    return {d: to_hex(cmap(n % 10)) for n, d in enumerate(sorted(device_ids))}


def plot_trajectory(trajectory: dict, city: CityMap, path: Path) -> Path:
    """
    Вид сверху: здания, пути БПЛА по цвету обслуживаемого устройства
    (чёрный без сбора), якоря треугольниками, остальные устройства
    звёздами, оценки позиций крестиками.
    """
    cs = city.cell_size_m
    fig, ax = plt.subplots(figsize=(6, 6 * city.height_m / city.width_m))
    ax.imshow(
        city.heights_m, origin="lower", cmap="Greys", alpha=0.6,
        extent=(0.0, city.width_m, 0.0, city.height_m),
    )

    devices = trajectory.get("devices", [])
    colors = _device_colors([d["id"] for d in devices])

    steps = trajectory.get("steps", [])
    for prev, cur in zip(steps, steps[1:]):
        for a, b in zip(prev["uavs"], cur["uavs"]):
            device = b.get("device")
            color = colors.get(device, IDLE_COLOR) if device is not None else IDLE_COLOR
            xs = [(a["cell"][0] + 0.5) * cs, (b["cell"][0] + 0.5) * cs]
            ys = [(a["cell"][1] + 0.5) * cs, (b["cell"][1] + 0.5) * cs]
            ax.plot(xs, ys, color=color, linewidth=1.5)

    for d in devices:
        x, y = (d["cell"][0] + 0.5) * cs, (d["cell"][1] + 0.5) * cs
        marker = "^" if d.get("anchor") else "*"
        ax.scatter([x], [y], marker=marker, s=90, color=colors[d["id"]], edgecolors="black", zorder=3)

    estimates = trajectory.get("estimates", [])
    if estimates:
        ax.scatter([e["x"] for e in estimates], [e["y"] for e in estimates], marker="x", s=60, color="red", zorder=4)

    sx, sy = city.center(*city.start_cell)
    tx, ty = city.center(*city.terminal_cell)
    ax.scatter([sx], [sy], marker="s", s=40, facecolors="none", edgecolors="blue", zorder=3)
    ax.scatter([tx], [ty], marker="D", s=40, facecolors="none", edgecolors="green", zorder=3)

    ratio = trajectory.get("collection_ratio")
    if ratio is not None:
        ax.set_title(f"Collection ratio {float(ratio):.3f}")
    ax.set_xlim(0.0, city.width_m)
    ax.set_ylim(0.0, city.height_m)
    ax.set_xlabel("x, m")
    ax.set_ylabel("y, m")
    ax.set_aspect("equal")
    fig.tight_layout()
    return _save(fig, path)


def plot_runs_from_files(paths: list[Path], out: Path) -> Path:
    """Кривые из нескольких CSV метрик; имя кривой по имени директории прогона."""
    runs = {}
    for p in paths:
        p = Path(p)
        name = p.parent.name or p.stem
        if name in runs:
            name = f"{name}:{p.stem}"
        runs[name] = MetricsRepository.read_path(p)
    return plot_performance(runs, out)
