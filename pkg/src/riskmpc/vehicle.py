"""Discrete-time kinematic bicycle model (forward Euler)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

STATE_FIELDS = ("x", "y", "theta", "v")
INPUT_FIELDS = ("delta", "a")

_INF = math.inf


@dataclass(frozen=True)
class VehicleState:
    x: float  # longitudinal position (m)
    y: float  # lateral position (m)
    theta: float  # heading (rad)
    v: float  # longitudinal speed (m/s)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.theta, self.v)


@dataclass(frozen=True)
class ControlInput:
    delta: float  # front-axle steering angle (rad)
    a: float  # longitudinal acceleration (m/s^2)

    def as_tuple(self) -> tuple[float, float]:
        return (self.delta, self.a)


def _default_state_bounds() -> dict[str, tuple[float, float]]:
    return {name: (-_INF, _INF) for name in STATE_FIELDS}


def _default_input_bounds() -> dict[str, tuple[float, float]]:
    return {"delta": (-0.1, 0.1), "a": (-4.0, 0.5)}


@dataclass(frozen=True)
class VehicleParams:
    """Wheelbase, sampling time and the admissible state/input boxes.

    Bounds map field name to ``(lower, upper)``; missing state fields are
    unbounded. The model itself never clamps, the bounds are consumed by the
    optimal-control transcription.
    """

    wheelbase_L: float = 2.7
    ts: float = 0.75
    state_bounds: dict[str, tuple[float, float]] = field(default_factory=_default_state_bounds)
    input_bounds: dict[str, tuple[float, float]] = field(default_factory=_default_input_bounds)

    def __post_init__(self) -> None:
        if not (self.wheelbase_L > 0 and math.isfinite(self.wheelbase_L)):
            raise ValueError(f"wheelbase_L must be positive, got {self.wheelbase_L}")
        if not (self.ts > 0 and math.isfinite(self.ts)):
            raise ValueError(f"ts must be positive, got {self.ts}")
        sb = _default_state_bounds()
        for name, bound in self.state_bounds.items():
            if name not in STATE_FIELDS:
                raise ValueError(f"unknown state field {name!r}")
            sb[name] = (float(bound[0]), float(bound[1]))
        extra = set(self.input_bounds) - set(INPUT_FIELDS)
        if extra:
            raise ValueError(f"unknown input field(s) {sorted(extra)}")
        for name in INPUT_FIELDS:
            if name not in self.input_bounds:
                raise ValueError(f"missing input bound for {name!r}")
        ib = {name: (float(self.input_bounds[name][0]), float(self.input_bounds[name][1]))
              for name in INPUT_FIELDS}
        for name, (lo, hi) in {**sb, **ib}.items():
            if lo > hi:
                raise ValueError(f"bound for {name!r} is inverted: lower {lo} > upper {hi}")
        for name, (lo, hi) in ib.items():
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"input bound for {name!r} must be finite")
        object.__setattr__(self, "state_bounds", sb)
        object.__setattr__(self, "input_bounds", ib)

    def clamp_state(self, s: VehicleState) -> VehicleState:
        vals = [min(max(val, self.state_bounds[n][0]), self.state_bounds[n][1])
                for n, val in zip(STATE_FIELDS, s.as_tuple())]
        return VehicleState(*vals)

    def clamp_input(self, u: ControlInput) -> ControlInput:
        vals = [min(max(val, self.input_bounds[n][0]), self.input_bounds[n][1])
                for n, val in zip(INPUT_FIELDS, u.as_tuple())]
        return ControlInput(*vals)


def step(state: VehicleState, u: ControlInput, params: VehicleParams) -> VehicleState:
    """Advance one sampling period. No clamping is applied."""
    ts = params.ts
    return VehicleState(
        x=state.x + ts * state.v * math.cos(state.theta),
        y=state.y + ts * state.v * math.sin(state.theta),
        theta=state.theta + ts * (state.v / params.wheelbase_L) * math.tan(u.delta),
        v=state.v + ts * u.a,
    )


def rollout(x0: VehicleState, inputs: Sequence[ControlInput], params: VehicleParams) -> list[VehicleState]:
    """Simulate the horizon; returns ``len(inputs) + 1`` states starting with ``x0``."""
    if len(inputs) == 0:
        raise ValueError("rollout needs at least one input")
    states = [x0]
    for u in inputs:
        states.append(step(states[-1], u, params))
    return states
