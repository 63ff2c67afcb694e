"""Gaussian artificial-potential risk fields for lane boundaries and objects.

Both fields are evaluated at the ego planar position and come with exact
analytic gradients so the trajectory optimizer can use them directly.
The ``*_terms`` functions are the vectorized kernels used by the optimal
control problem; the scalar functions below wrap them for a single point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

MAX_GRID_CELLS = 10_000_000


@dataclass(frozen=True)
class LaneLine:
    """Cubic boundary ``y = c0 + c1 x + c2 x^2 + c3 x^3`` in the planning frame.

    ``amplitude`` overrides the shared infrastructure amplitude for this line.
    """

    c0: float
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    amplitude: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("c0", "c1", "c2", "c3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"lane line coefficient {name} must be finite")
        if self.amplitude is not None and not (self.amplitude >= 0):
            raise ValueError("lane line amplitude must be >= 0")

    def y_at(self, x):
        return self.c0 + x * (self.c1 + x * (self.c2 + x * self.c3))

    def slope_at(self, x):
        return self.c1 + x * (2.0 * self.c2 + 3.0 * x * self.c3)


@dataclass(frozen=True)
class InfraRiskParams:
    amplitude_AI: float = 100.0
    sigma: float = 1.3  # m

    def __post_init__(self) -> None:
        if not (self.amplitude_AI >= 0 and math.isfinite(self.amplitude_AI)):
            raise ValueError("amplitude_AI must be finite and >= 0")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class ObjectState:
    x_o: float
    y_o: float
    theta_o: float = 0.0


@dataclass(frozen=True)
class ObjectRiskParams:
    amplitude_AO: float = 1000.0
    sigma_x: float = 20.0  # m, along the object heading
    sigma_y: float = 1.3  # m, across the object heading

    def __post_init__(self) -> None:
        if not (self.amplitude_AO >= 0 and math.isfinite(self.amplitude_AO)):
            raise ValueError("amplitude_AO must be finite and >= 0")
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("sigma_x and sigma_y must be positive")


# --------------------------------------------------------------------------
# vectorized kernels
# --------------------------------------------------------------------------

def line_arrays(lines: Sequence[LaneLine], p: InfraRiskParams) -> tuple[np.ndarray, np.ndarray]:
    """Pack lines into a (n, 4) coefficient array and an (n,) amplitude array."""
    coeffs = np.array([[ln.c0, ln.c1, ln.c2, ln.c3] for ln in lines], dtype=float).reshape(-1, 4)
    amps = np.array([p.amplitude_AI if ln.amplitude is None else ln.amplitude for ln in lines],
                    dtype=float)
    return coeffs, amps


def infra_terms(x, y, coeffs: np.ndarray, amps: np.ndarray, sigma: float):
    """Infrastructure risk and its (d/dx, d/dy) at every point of ``x``, ``y``.

    The lateral offset is measured vertically to each curve at the ego ``x``.
    """
    val, grad = infra_value(x, y, coeffs, amps, sigma)
    return (val, *grad())


def infra_value(x, y, coeffs: np.ndarray, amps: np.ndarray, sigma: float):
    """Like :func:`infra_terms`, but the gradient comes back as a deferred callable."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if coeffs.shape[0] == 0:
        z = np.zeros(np.broadcast(x, y).shape)
        return z, lambda: (z.copy(), z.copy())
    xe = x[..., None]
    c0, c1, c2, c3 = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2], coeffs[:, 3]
    yl = c0 + xe * (c1 + xe * (c2 + xe * c3))
    off = y[..., None] - yl
    inv_s2 = 1.0 / (sigma * sigma)
    val = amps * np.exp(-0.5 * off * off * inv_s2)

    def grad():
        slope = c1 + xe * (2.0 * c2 + 3.0 * xe * c3)
        dy_each = -val * off * inv_s2
        return (-dy_each * slope).sum(axis=-1), dy_each.sum(axis=-1)
    return val.sum(axis=-1), grad


def object_terms(x, y, xo, yo, tho, amp, sx, sy):
    """Object risk and its (d/dx, d/dy).

    Ego coordinates broadcast against the object arrays; the last axis of the
    object arrays is summed over (objects), so pass object data with the
    object index last.
    """
    val, grad = object_value(x, y, xo, yo, tho, amp, sx, sy)
    return (val, *grad())


def object_value(x, y, xo, yo, tho, amp, sx, sy):
    """Like :func:`object_terms`, but the gradient comes back as a deferred callable."""
    dx = np.asarray(x, dtype=float)[..., None] - xo
    dy = np.asarray(y, dtype=float)[..., None] - yo
    c = np.cos(tho)
    s = np.sin(tho)
    # coordinates in the object frame: R^T d
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    ix = 1.0 / (sx * sx)
    iy = 1.0 / (sy * sy)
    val = amp * np.exp(-0.5 * (lx * lx * ix + ly * ly * iy))

    def grad():
        # gradient of f/2 is R Sigma^-1 R^T d
        gx = c * lx * ix - s * ly * iy
        gy = s * lx * ix + c * ly * iy
        return (-val * gx).sum(axis=-1), (-val * gy).sum(axis=-1)
    return val.sum(axis=-1), grad


def _object_arrays(objects: Iterable[tuple[ObjectState, ObjectRiskParams]]):
    objs = list(objects)
    cols = np.array([[o.x_o, o.y_o, o.theta_o, r.amplitude_AO, r.sigma_x, r.sigma_y]
                     for o, r in objs], dtype=float).reshape(-1, 6)
    return tuple(cols[:, i] for i in range(6))


# --------------------------------------------------------------------------
# point API
# --------------------------------------------------------------------------

def infra_risk(pos, lines: Sequence[LaneLine], p: InfraRiskParams) -> float:
    coeffs, amps = line_arrays(lines, p)
    val, _, _ = infra_terms(pos[0], pos[1], coeffs, amps, p.sigma)
    return float(val)


def infra_risk_grad(pos, lines: Sequence[LaneLine], p: InfraRiskParams) -> np.ndarray:
    coeffs, amps = line_arrays(lines, p)
    _, gx, gy = infra_terms(pos[0], pos[1], coeffs, amps, p.sigma)
    return np.array([float(gx), float(gy)])


def object_risk(pos, objects: Iterable[tuple[ObjectState, ObjectRiskParams]]) -> float:
    val, _, _ = object_terms(pos[0], pos[1], *_object_arrays(objects))
    return float(val)


def object_risk_grad(pos, objects: Iterable[tuple[ObjectState, ObjectRiskParams]]) -> np.ndarray:
    _, gx, gy = object_terms(pos[0], pos[1], *_object_arrays(objects))
    return np.array([float(gx), float(gy)])


# --------------------------------------------------------------------------
# raster sampling
# --------------------------------------------------------------------------

@dataclass
class RiskGrid:
    """Risk sampled at cell centers.

    ``values[j, i]`` is the cell centered at ``(x0 + (i + 0.5) dx, y0 + (j + 0.5) dy)``:
    rows run along y, columns along x (row-major, first row = lowest y).
    """

    x0: float
    y0: float
    dx: float
    dy: float
    values: np.ndarray

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return xs, ys


def sample_field(region, resolution: float, lines: Sequence[LaneLine],
                 objects: Iterable[tuple[ObjectState, ObjectRiskParams]],
                 params: InfraRiskParams) -> RiskGrid:
    """Sample infra + object risk on a regular grid.

    ``region`` is ``(x_min, x_max, y_min, y_max)``.
    """
    x_min, x_max, y_min, y_max = (float(v) for v in region)
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if not (x_max > x_min and y_max > y_min):
        raise ValueError("region is degenerate")
    nx = int(math.ceil((x_max - x_min) / resolution - 1e-9))
    ny = int(math.ceil((y_max - y_min) / resolution - 1e-9))
    if nx * ny > MAX_GRID_CELLS:
        raise ValueError(f"region has {nx * ny} cells, limit is {MAX_GRID_CELLS}")
    grid = RiskGrid(x_min, y_min, resolution, resolution, np.zeros((ny, nx)))
    xs, ys = grid.centers()
    X, Y = np.meshgrid(xs, ys)
    coeffs, amps = line_arrays(lines, params)
    infra, _, _ = infra_terms(X, Y, coeffs, amps, params.sigma)
    obj, _, _ = object_terms(X, Y, *_object_arrays(objects))
    grid.values = infra + obj
    return grid
