"""Finite-horizon risk-averse optimal-control problem, transcribed by single shooting.

Decision variables are the ``2N`` inputs ``[delta_0, a_0, delta_1, a_1, ...]``;
states are recovered by rolling the bicycle model forward, so the initial
condition and the dynamics hold by construction. Input bounds are a box,
state bounds enter the cost as a quadratic exterior penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .risk import (
    InfraRiskParams,
    LaneLine,
    ObjectRiskParams,
    ObjectState,
    infra_value,
    line_arrays,
    object_value,
)
from .vehicle import STATE_FIELDS, ControlInput, VehicleParams, VehicleState, rollout

DEFAULT_PENALTY_WEIGHT = 1e4


@dataclass(frozen=True)
class OcpWeights:
    input_weight: tuple[float, float] = (1.0, 100.0)  # (delta, a)
    terminal_weight: tuple[float, float, float, float] = (1.0, 0.01, 0.0, 0.0)  # (x, y, theta, v)
    stage_weight: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        for name, n in (("input_weight", 2), ("terminal_weight", 4), ("stage_weight", 4)):
            w = tuple(float(v) for v in getattr(self, name))
            if len(w) != n:
                raise ValueError(f"{name} needs {n} entries, got {len(w)}")
            if any(not (v >= 0 and math.isfinite(v)) for v in w):
                raise ValueError(f"{name} entries must be finite and >= 0")
            object.__setattr__(self, name, w)


@dataclass(frozen=True)
class ReferenceState(VehicleState):
    """Goal state at the end of the horizon."""


def build_reference(initial: VehicleState, lane_center_y: float, v_bar: float,
                    N: int, ts: float) -> ReferenceState:
    """Goal in the target lane center, ``N * ts * v_bar`` ahead of the ego."""
    if not v_bar > 0:
        raise ValueError("v_bar must be positive")
    return ReferenceState(x=initial.x + N * ts * v_bar, y=lane_center_y, theta=0.0, v=v_bar)


@dataclass(frozen=True)
class ObjectPrediction:
    """Predicted object poses for steps ``0..N`` and the object's risk shape."""

    states: tuple[ObjectState, ...]
    risk: ObjectRiskParams


@dataclass(frozen=True)
class CostBreakdown:
    input: float
    stage: float
    terminal: float
    infra: float
    object: float
    penalty: float

    @property
    def total(self) -> float:
        return self.input + self.stage + self.terminal + self.infra + self.object + self.penalty


@dataclass(frozen=True)
class OcpProblem:
    horizon_N: int
    initial_state: VehicleState
    reference: VehicleState
    weights: OcpWeights = field(default_factory=OcpWeights)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    lines: tuple[LaneLine, ...] = ()
    infra: InfraRiskParams = field(default_factory=InfraRiskParams)
    object_predictions: tuple[ObjectPrediction, ...] = ()
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT
    # references for steps 1..N-1; only needed when stage_weight is non-zero
    stage_references: Optional[tuple[VehicleState, ...]] = None

    def __post_init__(self) -> None:
        N = self.horizon_N
        if int(N) != N or N < 2:
            raise ValueError(f"horizon_N must be an integer >= 2, got {N}")
        if not (self.penalty_weight >= 0):
            raise ValueError("penalty_weight must be >= 0")
        for pred in self.object_predictions:
            if len(pred.states) != N + 1:
                raise ValueError(f"object prediction covers {len(pred.states)} steps, need {N + 1}")
        if any(self.weights.stage_weight):
            if self.stage_references is None or len(self.stage_references) != N - 1:
                raise ValueError("non-zero stage_weight requires N-1 stage_references")
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "object_predictions", tuple(self.object_predictions))
        object.__setattr__(self, "_cache", _pack(self))


@dataclass(frozen=True)
class OcpSolution:
    inputs: tuple[ControlInput, ...]
    states: tuple[VehicleState, ...]
    cost: float
    cost_breakdown: CostBreakdown


class _Packed:
    """Arrays precomputed once per problem for the hot evaluation path."""

    def __init__(self, p: OcpProblem):
        self.coeffs, self.amps = line_arrays(p.lines, p.infra)
        n_obj = len(p.object_predictions)
        N = p.horizon_N
        self.n_obj = n_obj
        obj = np.zeros((3, N, n_obj))
        for j, pred in enumerate(p.object_predictions):
            for k, s in enumerate(pred.states[1:]):
                obj[:, k, j] = (s.x_o, s.y_o, s.theta_o)
        self.xo, self.yo, self.tho = obj
        self.amp = np.array([pr.risk.amplitude_AO for pr in p.object_predictions], dtype=float)
        self.sx = np.array([pr.risk.sigma_x for pr in p.object_predictions], dtype=float)
        self.sy = np.array([pr.risk.sigma_y for pr in p.object_predictions], dtype=float)
        bounds = p.vehicle.state_bounds
        self.lo = np.array([bounds[n][0] for n in STATE_FIELDS])
        self.hi = np.array([bounds[n][1] for n in STATE_FIELDS])
        self.ref = np.array(p.reference.as_tuple(), dtype=float)
        self.wt = np.array(p.weights.terminal_weight)
        self.wu = np.array(p.weights.input_weight)
        self.ws = np.array(p.weights.stage_weight)
        if p.stage_references is not None:
            self.stage_ref = np.array([r.as_tuple() for r in p.stage_references], dtype=float)
        else:
            self.stage_ref = np.zeros((N - 1, 4))
        self.use_stage = bool(np.any(self.ws))


def _pack(p: OcpProblem) -> _Packed:
    return _Packed(p)


def as_input_array(inputs, N: int) -> np.ndarray:
    """Accept ControlInput sequences, (N, 2) arrays or flat 2N vectors."""
    if len(inputs) and isinstance(inputs[0], ControlInput):
        u = np.array([ci.as_tuple() for ci in inputs], dtype=float)
    else:
        u = np.asarray(inputs, dtype=float).reshape(-1, 2) if np.size(inputs) else np.zeros((0, 2))
    if u.shape != (N, 2):
        raise ValueError(f"expected {N} inputs, got {u.shape[0]}")
    return u


def _evaluate(p: OcpProblem, u: np.ndarray):
    """Forward pass; returns the breakdown and a callable running the adjoint sweep."""
    c: _Packed = p._cache  # type: ignore[attr-defined]
    N = p.horizon_N
    ts = p.vehicle.ts
    L = p.vehicle.wheelbase_L

    # forward rollout, same arithmetic as vehicle.step
    xs = [0.0] * (N + 1)
    ys = [0.0] * (N + 1)
    ths = [0.0] * (N + 1)
    vs = [0.0] * (N + 1)
    s0 = p.initial_state
    xs[0], ys[0], ths[0], vs[0] = s0.x, s0.y, s0.theta, s0.v
    deltas = u[:, 0].tolist()
    accs = u[:, 1].tolist()
    for k in range(N):
        x, y, th, v = xs[k], ys[k], ths[k], vs[k]
        xs[k + 1] = x + ts * v * math.cos(th)
        ys[k + 1] = y + ts * v * math.sin(th)
        ths[k + 1] = th + ts * (v / L) * math.tan(deltas[k])
        vs[k + 1] = v + ts * accs[k]

    S = np.array([xs[1:], ys[1:], ths[1:], vs[1:]]).T  # states 1..N
    X, Y = S[:, 0], S[:, 1]

    input_cost = float((c.wu * u * u).sum())
    dterm = S[-1] - c.ref
    terminal = float((c.wt * dterm * dterm).sum())
    if c.use_stage:
        dstage = S[:-1] - c.stage_ref
        stage = float((c.ws * dstage * dstage).sum())
    else:
        dstage = None
        stage = 0.0
    infra_v, infra_grad = infra_value(X, Y, c.coeffs, c.amps, p.infra.sigma)
    if c.n_obj:
        obj_v, obj_grad = object_value(X, Y, c.xo, c.yo, c.tho, c.amp, c.sx, c.sy)
    else:
        obj_v = np.zeros(N)
        obj_grad = None
    over = np.maximum(S - c.hi, 0.0)
    under = np.maximum(c.lo - S, 0.0)
    penalty = p.penalty_weight * float((over * over + under * under).sum())

    breakdown = CostBreakdown(
        input=input_cost,
        stage=stage,
        terminal=terminal,
        infra=float(infra_v.sum()),
        object=float(obj_v.sum()),
        penalty=penalty,
    )

    def grad():
        infra_gx, infra_gy = infra_grad()
        obj_gx, obj_gy = obj_grad() if obj_grad is not None else (np.zeros(N), np.zeros(N))
        return _adjoint(p, c, u, ths, vs, deltas, over, under, dterm, dstage,
                        infra_gx + obj_gx, infra_gy + obj_gy)
    return breakdown, grad


def _adjoint(p, c, u, ths, vs, deltas, over, under, dterm, dstage, risk_gx, risk_gy):
    N = p.horizon_N
    ts = p.vehicle.ts
    L = p.vehicle.wheelbase_L
    # d(cost)/d(state_k) for k = 1..N
    G = 2.0 * p.penalty_weight * (over - under)
    G[:, 0] += risk_gx
    G[:, 1] += risk_gy
    G[-1] += 2.0 * c.wt * dterm
    if dstage is not None:
        G[:-1] += 2.0 * c.ws * dstage
    gl = G.tolist()

    grad = 2.0 * c.wu * u
    gd = grad[:, 0].tolist()
    ga = grad[:, 1].tolist()
    lx, ly, lth, lv = gl[N - 1]
    for k in range(N - 1, -1, -1):
        # (lx, ly, lth, lv) is the adjoint of state k+1
        th, v, d = ths[k], vs[k], deltas[k]
        cd = math.cos(d)
        gd[k] += lth * ts * v / (L * cd * cd)
        ga[k] += lv * ts
        if k == 0:
            break
        ct, st = math.cos(th), math.sin(th)
        nlth = lth + ts * v * (ly * ct - lx * st)
        nlv = lv + ts * (lx * ct + ly * st) + lth * ts * math.tan(d) / L
        gk = gl[k - 1]
        lx, ly, lth, lv = lx + gk[0], ly + gk[1], nlth + gk[2], nlv + gk[3]
    return np.column_stack([gd, ga]).ravel()


def total_cost(problem: OcpProblem, inputs) -> tuple[float, CostBreakdown]:
    """Objective value and its per-term breakdown (state penalty included)."""
    u = as_input_array(inputs, problem.horizon_N)
    b, _ = _evaluate(problem, u)
    return b.total, b


def cost_gradient(problem: OcpProblem, inputs) -> np.ndarray:
    """Exact gradient of :func:`total_cost` w.r.t. the flat input vector (adjoint sweep)."""
    u = as_input_array(inputs, problem.horizon_N)
    return _evaluate(problem, u)[1]()


def cost_and_gradient(problem: OcpProblem, z: np.ndarray) -> tuple[float, np.ndarray]:
    b, grad = _evaluate(problem, np.asarray(z, dtype=float).reshape(-1, 2))
    return b.total, grad()


def cost_and_lazy_gradient(problem: OcpProblem, z: np.ndarray):
    """Cost plus a zero-argument callable for the gradient, so rejected trial points skip the adjoint."""
    b, grad = _evaluate(problem, np.asarray(z, dtype=float).reshape(-1, 2))
    return b.total, grad


def input_bounds(problem: OcpProblem) -> tuple[np.ndarray, np.ndarray]:
    ib = problem.vehicle.input_bounds
    N = problem.horizon_N
    lo = np.tile([ib["delta"][0], ib["a"][0]], N).astype(float)
    hi = np.tile([ib["delta"][1], ib["a"][1]], N).astype(float)
    return lo, hi


def state_penalty(problem: OcpProblem, inputs) -> float:
    """Quadratic exterior penalty on state-bound violations over steps 1..N."""
    _, b = total_cost(problem, inputs)
    return b.penalty


def make_solution(problem: OcpProblem, z) -> OcpSolution:
    u = as_input_array(z, problem.horizon_N)
    inputs = tuple(ControlInput(float(d), float(a)) for d, a in u)
    states = tuple(rollout(problem.initial_state, inputs, problem.vehicle))
    cost, b = total_cost(problem, u)
    return OcpSolution(inputs=inputs, states=states, cost=cost, cost_breakdown=b)


def zero_inputs(N: int) -> np.ndarray:
    return np.zeros(2 * N)


def problem_with(problem: OcpProblem, **changes) -> OcpProblem:
    """Copy of ``problem`` with some fields replaced (re-validated)."""
    kw = {f: getattr(problem, f) for f in (
        "horizon_N", "initial_state", "reference", "weights", "vehicle", "lines",
        "infra", "object_predictions", "penalty_weight", "stage_references")}
    kw.update(changes)
    return OcpProblem(**kw)

