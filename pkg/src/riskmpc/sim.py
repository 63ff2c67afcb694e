"""Closed-loop receding-horizon simulation with perfect trajectory tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import ocp, solver
from .ocp import ObjectPrediction, OcpProblem, OcpSolution, OcpWeights
from .risk import (
    InfraRiskParams,
    LaneLine,
    ObjectRiskParams,
    ObjectState,
    infra_risk,
    object_risk,
)
from .solver import SolverConfig, SolveReport
from .vehicle import STATE_FIELDS, ControlInput, VehicleParams, VehicleState


TIME_BUDGET_FRACTION = 0.9


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ObjectTrack:
    """Ground-truth object moving at constant speed along a constant heading."""

    initial: ObjectState
    speed: float = 0.0  # m/s along the heading
    risk: ObjectRiskParams = field(default_factory=ObjectRiskParams)
    detection_time: float = 0.0  # s; the planner ignores the object before this
    name: str = ""

    def __post_init__(self) -> None:
        if not self.speed >= 0:
            raise ValueError("object speed must be >= 0")
        if not self.detection_time >= 0:
            raise ValueError("detection_time must be >= 0")

    def pose_at(self, t: float) -> ObjectState:
        o = self.initial
        return ObjectState(o.x_o + t * self.speed * math.cos(o.theta_o),
                           o.y_o + t * self.speed * math.sin(o.theta_o),
                           o.theta_o)


@dataclass(frozen=True)
class MpcConfig:
    ts: float = 0.75
    horizon: int = 10
    weights: OcpWeights = field(default_factory=OcpWeights)
    infra: InfraRiskParams = field(default_factory=InfraRiskParams)
    object_risk: ObjectRiskParams = field(default_factory=ObjectRiskParams)  # default object shape
    penalty_weight: float = ocp.DEFAULT_PENALTY_WEIGHT

    def __post_init__(self) -> None:
        if not self.ts > 0:
            raise ValueError("ts must be positive")
        if int(self.horizon) != self.horizon or self.horizon < 2:
            raise ValueError("horizon must be an integer >= 2")


@dataclass(frozen=True)
class Scenario:
    name: str
    lanes: tuple[LaneLine, ...]
    lane_centers: tuple[float, ...]
    rightmost_index: int
    ego_initial: VehicleState
    objects: tuple[ObjectTrack, ...]
    mpc: MpcConfig
    solver: SolverConfig
    vehicle: VehicleParams
    v_bar: float
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.v_bar > 0:
            raise ValueError("v_bar must be positive")
        if not self.lane_centers:
            raise ValueError("at least one lane center is required")
        if not 0 <= self.rightmost_index < len(self.lane_centers):
            raise ValueError("rightmost_index out of range")
        if abs(self.vehicle.ts - self.mpc.ts) > 0:
            raise ValueError("vehicle.ts and mpc.ts differ")
        lo, hi = self.vehicle.state_bounds["y"]
        if not lo <= self.target_lane_y <= hi:
            raise ValueError("rightmost lane center lies outside the y bounds")

    @property
    def ts(self) -> float:
        return self.mpc.ts

    @property
    def target_lane_y(self) -> float:
        return self.lane_centers[self.rightmost_index]

    @property
    def n_ticks(self) -> int:
        return int(math.ceil(self.duration / self.ts - 1e-9))


@dataclass
class TickRecord:
    time: float
    state: VehicleState
    applied: ControlInput
    plan: OcpSolution
    report: SolveReport
    object_distances: tuple[float, ...]  # ground truth, every object
    infra_risk: float
    object_risk: float  # from objects visible to the planner
    n_visible: int


@dataclass
class SimLog:
    scenario: str
    ts: float
    records: list[TickRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        if name in STATE_FIELDS:
            return np.array([getattr(r.state, name) for r in self.records])
        if name in ("delta", "a"):
            return np.array([getattr(r.applied, name) for r in self.records])
        if name == "time":
            return np.array([r.time for r in self.records])
        if name == "solve_time":
            return np.array([r.report.wall_time for r in self.records])
        if name == "min_distance":
            return np.array([min(r.object_distances, default=math.inf) for r in self.records])
        raise KeyError(name)


def predict_object(track: ObjectTrack, t_now: float, N: int, ts: float) -> list[ObjectState]:
    """Constant-velocity, constant-heading extrapolation over ``N`` steps."""
    p = track.pose_at(t_now)
    vx = track.speed * math.cos(p.theta_o)
    vy = track.speed * math.sin(p.theta_o)
    return [ObjectState(p.x_o + k * ts * vx, p.y_o + k * ts * vy, p.theta_o) for k in range(N + 1)]


def visible_objects(scenario: Scenario, t_now: float) -> list[ObjectTrack]:
    return [o for o in scenario.objects if o.detection_time <= t_now]


def build_problem(scenario: Scenario, state: VehicleState, t_now: float) -> OcpProblem:
    m = scenario.mpc
    N = m.horizon
    preds = tuple(
        ObjectPrediction(tuple(predict_object(o, t_now, N, m.ts)), o.risk)
        for o in visible_objects(scenario, t_now)
    )
    ref = ocp.build_reference(state, scenario.target_lane_y, scenario.v_bar, N, m.ts)
    return OcpProblem(
        horizon_N=N,
        initial_state=state,
        reference=ref,
        weights=m.weights,
        vehicle=scenario.vehicle,
        lines=scenario.lanes,
        infra=m.infra,
        object_predictions=preds,
        penalty_weight=m.penalty_weight,
    )


def _solver_config(scenario: Scenario) -> SolverConfig:
    cfg = scenario.solver
    if cfg.time_budget is None:
        kw = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
        # headroom so an iteration that starts near the deadline still ends inside the tick
        kw["time_budget"] = TIME_BUDGET_FRACTION * scenario.ts
        cfg = SolverConfig(**kw)
    return cfg


def run(scenario: Scenario, progress=None) -> SimLog:
    """Run the closed loop for ``scenario.duration`` seconds.

    Each tick solves the horizon problem from the current state, applies the
    first planned step exactly, and records the outcome. ``progress`` is an
    optional callable receiving each :class:`TickRecord`.
    """
    cfg = _solver_config(scenario)
    log = SimLog(scenario=scenario.name, ts=scenario.ts)
    state = scenario.ego_initial
    warm: Optional[np.ndarray] = None
    for j in range(scenario.n_ticks):
        t = j * scenario.ts
        problem = build_problem(scenario, state, t)
        sol, report = solver.solve(problem, cfg, warm_start=warm)
        nxt = sol.states[1]
        if not all(math.isfinite(v) for v in nxt.as_tuple()):
            raise SimulationError(f"solver produced a non-finite state at t={t:.2f}s: {nxt}")
        truth = [o.pose_at(t) for o in scenario.objects]
        dists = tuple(math.hypot(state.x - p.x_o, state.y - p.y_o) for p in truth)
        visible = visible_objects(scenario, t)
        rec = TickRecord(
            time=t,
            state=state,
            applied=sol.inputs[0],
            plan=sol,
            report=report,
            object_distances=dists,
            infra_risk=infra_risk((state.x, state.y), scenario.lanes, scenario.mpc.infra),
            object_risk=object_risk((state.x, state.y), [(o.pose_at(t), o.risk) for o in visible]),
            n_visible=len(visible),
        )
        log.records.append(rec)
        if progress is not None:
            progress(rec)
        if cfg.warm_start:
            warm = solver.shift_warm_start(np.array([u.as_tuple() for u in sol.inputs]))
        state = nxt
    return log


def lane_index(y: float, boundaries: list[float]) -> int:
    """0-based lane index counted from the lowest boundary (rightmost lane = 0)."""
    b = sorted(boundaries)
    for i in range(len(b) - 1):
        if y < b[i + 1]:
            return i
    return len(b) - 2


def lane_trace(log: SimLog, scenario: Scenario) -> list[int]:
    """Lane index per tick, using the straight-line boundary offsets (c0) at the ego x."""
    out = []
    for r in log.records:
        bounds = [ln.y_at(r.state.x) for ln in scenario.lanes]
        out.append(lane_index(r.state.y, bounds))
    return out


def lane_changes(trace: list[int]) -> list[int]:
    """Signed lane changes (+1 = to the left) in the order they happened."""
    return [b - a for a, b in zip(trace, trace[1:]) if b != a]


def bound_violation(state: VehicleState, params: VehicleParams) -> float:
    worst = 0.0
    for name, val in zip(STATE_FIELDS, state.as_tuple()):
        lo, hi = params.state_bounds[name]
        worst = max(worst, lo - val, val - hi)
    return worst


def metrics(log: SimLog, scenario: Optional[Scenario] = None) -> dict:
    """Summary statistics of a run (times in seconds, distances in meters)."""
    if not log.records:
        raise ValueError("empty log")
    times = log.column("solve_time")
    v = log.column("v")
    out = {
        "ticks": len(log),
        "mean_solve_time": float(np.mean(times)),
        "std_solve_time": float(np.std(times)),
        "max_solve_time": float(np.max(times)),
        "min_object_distance": float(np.min(log.column("min_distance"))),
        "min_speed": float(np.min(v)),
        "final_speed": float(v[-1]),
        "converged_ticks": sum(r.report.status == solver.CONVERGED for r in log.records),
    }
    if scenario is not None:
        out["max_bound_violation"] = max(bound_violation(r.state, scenario.vehicle) for r in log.records)
        out["terminal_lateral_error"] = abs(log.records[-1].state.y - scenario.target_lane_y)
    return out
