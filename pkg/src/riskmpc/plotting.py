"""Static figures for runs and risk fields (matplotlib, file output only)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .risk import RiskGrid  # noqa: E402
from .sim import Scenario, SimLog  # noqa: E402


def _lane_lines(ax, scenario: Scenario, x_lo: float, x_hi: float) -> None:
    xs = np.linspace(x_lo, x_hi, 200)
    for ln in scenario.lanes:
        ax.plot(xs, ln.y_at(xs), color="0.4", lw=0.8, ls="--")


def plot_run(log: SimLog, scenario: Scenario, out_dir) -> list[Path]:
    """Write the three per-run figures and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = log.column("time")
    x = log.column("x")
    y = log.column("y")
    v = log.column("v")
    paths = []

    fig, ax = plt.subplots(figsize=(10, 3.2))
    _lane_lines(ax, scenario, float(x.min()) - 5, float(x.max()) + 5)
    ax.plot(x, y, color="C0", lw=1.6, label="ego")
    for k, obj in enumerate(scenario.objects):
        poses = [obj.pose_at(tt) for tt in t]
        ax.plot([p.x_o for p in poses], [p.y_o for p in poses], color=f"C{k + 1}", lw=1.0,
                label=obj.name or f"object {k}")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{scenario.name}: path")
    ax.legend(loc="upper left", fontsize=8)
    offsets = [ln.c0 for ln in scenario.lanes] + [float(y.min()), float(y.max())]
    ax.set_ylim(min(offsets) - 1.5, max(offsets) + 1.5)
    paths.append(_save(fig, out_dir / f"{scenario.name}_path.png"))

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(t, v, color="C0")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("v [m/s]")
    ax.set_title(f"{scenario.name}: speed")
    ax.grid(alpha=0.3)
    paths.append(_save(fig, out_dir / f"{scenario.name}_speed.png"))

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(t, y, color="C0")
    for c in scenario.lane_centers:
        ax.axhline(c, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{scenario.name}: lateral position")
    ax.grid(alpha=0.3)
    paths.append(_save(fig, out_dir / f"{scenario.name}_lateral.png"))
    return paths


def plot_field(grid: RiskGrid, path, title: Optional[str] = None) -> Path:
    fig, ax = plt.subplots(figsize=(9, 3.5))
    extent = (grid.x0, grid.x0 + grid.nx * grid.dx, grid.y0, grid.y0 + grid.ny * grid.dy)
    im = ax.imshow(grid.values, origin="lower", extent=extent, aspect="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label="risk")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    return _save(fig, Path(path))


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
