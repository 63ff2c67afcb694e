"""Plain-text exports: per-tick trajectory logs (CSV) and risk rasters.

Floats are written with ``repr`` so every value round-trips exactly. All
writes go to a temporary file in the target directory that is then renamed
into place, so a crashed run never leaves a half-written file behind.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .risk import RiskGrid
from .sim import SimLog

PathLike = Union[str, Path]

LOG_COLUMNS = (
    "time_s",
    "x_m",
    "y_m",
    "theta_rad",
    "v_mps",
    "delta_rad",
    "a_mps2",
    "solve_time_s",
    "status",
    "min_object_distance_m",
    "infra_risk",
    "object_risk",
)
# wall-clock column; the only one that differs between otherwise identical runs
TIMING_COLUMNS = ("solve_time_s",)


def atomic_write_text(path: PathLike, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _f(value: float) -> str:
    return repr(float(value))


def log_rows(log: SimLog) -> list[list[str]]:
    rows = []
    for r in log.records:
        s, u = r.state, r.applied
        rows.append([
            _f(r.time), _f(s.x), _f(s.y), _f(s.theta), _f(s.v), _f(u.delta), _f(u.a),
            _f(r.report.wall_time), r.report.status,
            _f(min(r.object_distances, default=float("inf"))),
            _f(r.infra_risk), _f(r.object_risk),
        ])
    return rows


def format_log(log: SimLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    w.writerows(log_rows(log))
    return buf.getvalue()


def write_log(log: SimLog, path: PathLike) -> None:
    atomic_write_text(path, format_log(log))


def read_log(path: PathLike) -> dict[str, np.ndarray]:
    """Columns of a trajectory log; ``status`` stays a string array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != LOG_COLUMNS:
            raise ValueError(f"unexpected log header: {header}")
        rows = list(reader)
    out: dict[str, np.ndarray] = {}
    for i, name in enumerate(LOG_COLUMNS):
        col = [row[i] for row in rows]
        out[name] = np.array(col) if name == "status" else np.array(col, dtype=float)
    return out


# --------------------------------------------------------------------------
# rasters
# --------------------------------------------------------------------------

RASTER_MAGIC = "# riskmpc raster v1"


def format_raster(grid: RiskGrid) -> str:
    """Text raster.

    Layout: a magic line, a comment describing the cell convention, a header
    line ``x0 y0 dx dy nx ny``, then ``ny`` rows of ``nx`` space-separated
    values. Row ``j`` holds cells centered at ``y0 + (j + 0.5) dy``, so the
    first row is the lowest y; column ``i`` is centered at ``x0 + (i + 0.5) dx``.
    """
    lines = [
        RASTER_MAGIC,
        "# row j, column i = cell centered at (x0 + (i+0.5)*dx, y0 + (j+0.5)*dy); first row = lowest y",
        " ".join([_f(grid.x0), _f(grid.y0), _f(grid.dx), _f(grid.dy), str(grid.nx), str(grid.ny)]),
    ]
    for row in grid.values:
        lines.append(" ".join(_f(v) for v in row))
    return "\n".join(lines) + "\n"


def write_raster(grid: RiskGrid, path: PathLike) -> None:
    atomic_write_text(path, format_raster(grid))


def read_raster(path: PathLike) -> RiskGrid:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != RASTER_MAGIC:
        raise ValueError("not a riskmpc raster")
    body = [ln for ln in lines if not ln.startswith("#")]
    x0, y0, dx, dy, nx, ny = body[0].split()
    values = np.array([[float(v) for v in ln.split()] for ln in body[1:]], dtype=float)
    if values.shape != (int(ny), int(nx)):
        raise ValueError(f"raster shape {values.shape} does not match header ({ny}, {nx})")
    return RiskGrid(float(x0), float(y0), float(dx), float(dy), values)
