"""Scenario documents: a strict, versioned YAML schema with units in the key names.

The pydantic models below mirror the file layout one-to-one and reject unknown
keys; :func:`parse_scenario` converts a validated document into the
:class:`~riskmpc.sim.Scenario` used by the simulator, and
:func:`scenario_to_dict` goes the other way.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    StrictBool,
    StrictInt,
    StrictStr,
    ValidationError,
    model_validator,
)

from .ocp import OcpWeights
from .risk import InfraRiskParams, LaneLine, ObjectRiskParams, ObjectState
from .sim import MpcConfig, ObjectTrack, Scenario
from .solver import SolverConfig
from .vehicle import VehicleParams, VehicleState

SCHEMA_VERSION = 1
FIXTURE_PACKAGE = "riskmpc.fixtures"


class ScenarioError(ValueError):
    """A scenario document failed to parse or validate."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, frozen=True)


class LineDoc(_Model):
    c0_m: float
    c1: float = 0.0
    c2_per_m: float = 0.0
    c3_per_m2: float = 0.0
    amplitude: Optional[float] = Field(default=None, ge=0)


class LanesDoc(_Model):
    lines: list[LineDoc]
    centers_m: list[float] = Field(min_length=1)
    rightmost_index: StrictInt = Field(ge=0)

    @model_validator(mode="after")
    def _index_in_range(self):
        if self.rightmost_index >= len(self.centers_m):
            raise ValueError(f"rightmost_index {self.rightmost_index} out of range for "
                             f"{len(self.centers_m)} lane centers")
        return self


class EgoDoc(_Model):
    x_m: float = 0.0
    y_m: float
    theta_rad: float = 0.0
    v_mps: float = Field(ge=0)


class ObjectDoc(_Model):
    name: StrictStr = ""
    x_m: float
    y_m: float
    theta_rad: float = 0.0
    speed_mps: float = Field(default=0.0, ge=0)
    detection_time_s: float = Field(default=0.0, ge=0)
    amplitude: Optional[float] = Field(default=None, ge=0)
    sigma_x_m: Optional[float] = Field(default=None, gt=0)
    sigma_y_m: Optional[float] = Field(default=None, gt=0)


class MpcDoc(_Model):
    ts_s: PositiveFloat
    horizon: StrictInt = Field(ge=2)
    input_weight: tuple[float, float]
    terminal_weight: tuple[float, float, float, float]
    stage_weight: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    infra_amplitude: NonNegativeFloat
    infra_sigma_m: PositiveFloat
    object_amplitude: NonNegativeFloat
    object_sigma_x_m: PositiveFloat
    object_sigma_y_m: PositiveFloat
    state_penalty_weight: float = Field(default=1e4, ge=0)

    @model_validator(mode="after")
    def _weights_nonneg(self):
        for key in ("input_weight", "terminal_weight", "stage_weight"):
            if any(w < 0 for w in getattr(self, key)):
                raise ValueError(f"{key} entries must be >= 0")
        return self


_SOLVER_DEFAULTS = SolverConfig()


class SolverDoc(_Model):
    max_iterations: StrictInt = Field(default=_SOLVER_DEFAULTS.max_iterations, ge=1)
    grad_tolerance: float = Field(default=_SOLVER_DEFAULTS.grad_tolerance, gt=0)
    time_budget_s: Optional[float] = Field(default=None, gt=0)
    shrink: float = Field(default=_SOLVER_DEFAULTS.shrink, gt=0, lt=1)
    sufficient_decrease: float = Field(default=_SOLVER_DEFAULTS.sufficient_decrease, gt=0, lt=1)
    warm_start: StrictBool = True
    memory: StrictInt = Field(default=_SOLVER_DEFAULTS.memory, ge=1)
    max_backtracks: StrictInt = Field(default=_SOLVER_DEFAULTS.max_backtracks, ge=1)
    max_evaluations: StrictInt = Field(default=_SOLVER_DEFAULTS.max_evaluations, ge=1)
    initial_step: float = Field(default=_SOLVER_DEFAULTS.initial_step, gt=0)
    max_step: float = Field(default=_SOLVER_DEFAULTS.max_step, gt=0)


class VehicleDoc(_Model):
    wheelbase_m: float = Field(default=2.7, gt=0)


Pair = Optional[tuple[float, float]]


class BoundsDoc(_Model):
    delta_rad: tuple[float, float]
    a_mps2: tuple[float, float]
    x_m: Pair = None
    y_m: Pair = None
    theta_rad: Pair = None
    v_mps: Pair = None

    @model_validator(mode="after")
    def _ordered(self):
        for key in ("delta_rad", "a_mps2", "x_m", "y_m", "theta_rad", "v_mps"):
            pair = getattr(self, key)
            if pair is not None and pair[0] > pair[1]:
                raise ValueError(f"{key}: lower bound {pair[0]} exceeds upper bound {pair[1]}")
        return self


class ScenarioDoc(_Model):
    version: StrictInt
    name: StrictStr = Field(min_length=1)
    duration_s: PositiveFloat
    v_bar_mps: PositiveFloat
    lanes: LanesDoc
    ego: EgoDoc
    objects: list[ObjectDoc] = []
    mpc: MpcDoc
    solver: SolverDoc = SolverDoc()
    vehicle: VehicleDoc = VehicleDoc()
    bounds: BoundsDoc

    @model_validator(mode="after")
    def _check_version(self):
        if self.version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {self.version}, expected {SCHEMA_VERSION}")
        return self


_STATE_KEYS = {"x": "x_m", "y": "y_m", "theta": "theta_rad", "v": "v_mps"}


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<document>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def scenario_from_doc(doc: ScenarioDoc) -> Scenario:
    m = doc.mpc
    default_risk = ObjectRiskParams(m.object_amplitude, m.object_sigma_x_m, m.object_sigma_y_m)
    tracks = []
    for o in doc.objects:
        risk = ObjectRiskParams(
            default_risk.amplitude_AO if o.amplitude is None else o.amplitude,
            default_risk.sigma_x if o.sigma_x_m is None else o.sigma_x_m,
            default_risk.sigma_y if o.sigma_y_m is None else o.sigma_y_m,
        )
        tracks.append(ObjectTrack(ObjectState(o.x_m, o.y_m, o.theta_rad), o.speed_mps, risk,
                                  o.detection_time_s, o.name))
    b = doc.bounds
    state_bounds = {name: getattr(b, key) for name, key in _STATE_KEYS.items()
                    if getattr(b, key) is not None}
    vehicle = VehicleParams(
        wheelbase_L=doc.vehicle.wheelbase_m,
        ts=m.ts_s,
        state_bounds=state_bounds,
        input_bounds={"delta": b.delta_rad, "a": b.a_mps2},
    )
    mpc = MpcConfig(
        ts=m.ts_s,
        horizon=m.horizon,
        weights=OcpWeights(m.input_weight, m.terminal_weight, m.stage_weight),
        infra=InfraRiskParams(m.infra_amplitude, m.infra_sigma_m),
        object_risk=default_risk,
        penalty_weight=m.state_penalty_weight,
    )
    s = doc.solver
    solver = SolverConfig(
        max_iterations=s.max_iterations,
        grad_tolerance=s.grad_tolerance,
        time_budget=s.time_budget_s,
        shrink=s.shrink,
        sufficient_decrease=s.sufficient_decrease,
        warm_start=s.warm_start,
        memory=s.memory,
        max_backtracks=s.max_backtracks,
        max_evaluations=s.max_evaluations,
        initial_step=s.initial_step,
        max_step=s.max_step,
    )
    lanes = tuple(LaneLine(ln.c0_m, ln.c1, ln.c2_per_m, ln.c3_per_m2, ln.amplitude)
                  for ln in doc.lanes.lines)
    return Scenario(
        name=doc.name,
        lanes=lanes,
        lane_centers=tuple(doc.lanes.centers_m),
        rightmost_index=doc.lanes.rightmost_index,
        ego_initial=VehicleState(doc.ego.x_m, doc.ego.y_m, doc.ego.theta_rad, doc.ego.v_mps),
        objects=tuple(tracks),
        mpc=mpc,
        solver=solver,
        vehicle=vehicle,
        v_bar=doc.v_bar_mps,
        duration=doc.duration_s,
    )


def parse_scenario_data(data: Any) -> Scenario:
    """Validate an already-decoded document (mapping) and build the scenario."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a mapping")
    try:
        doc = ScenarioDoc.model_validate(data)
    except ValidationError as err:
        raise ScenarioError(_format_validation_error(err)) from None
    try:
        return scenario_from_doc(doc)
    except ValueError as err:
        raise ScenarioError(str(err)) from None


def parse_scenario(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ScenarioError(f"malformed YAML: {err}") from None
    return parse_scenario_data(data)


def _pair(b: tuple[float, float]) -> list[float]:
    return [float(b[0]), float(b[1])]


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of :func:`parse_scenario_data`."""
    m = s.mpc
    objects = []
    for o in s.objects:
        d: dict[str, Any] = {}
        if o.name:
            d["name"] = o.name
        d.update(x_m=o.initial.x_o, y_m=o.initial.y_o, theta_rad=o.initial.theta_o,
                 speed_mps=o.speed, detection_time_s=o.detection_time)
        if o.risk.amplitude_AO != m.object_risk.amplitude_AO:
            d["amplitude"] = o.risk.amplitude_AO
        if o.risk.sigma_x != m.object_risk.sigma_x:
            d["sigma_x_m"] = o.risk.sigma_x
        if o.risk.sigma_y != m.object_risk.sigma_y:
            d["sigma_y_m"] = o.risk.sigma_y
        objects.append(d)
    lines = []
    for ln in s.lanes:
        d = {"c0_m": ln.c0, "c1": ln.c1, "c2_per_m": ln.c2, "c3_per_m2": ln.c3}
        if ln.amplitude is not None:
            d["amplitude"] = ln.amplitude
        lines.append(d)
    bounds: dict[str, Any] = {
        "delta_rad": _pair(s.vehicle.input_bounds["delta"]),
        "a_mps2": _pair(s.vehicle.input_bounds["a"]),
    }
    for name, key in _STATE_KEYS.items():
        lo, hi = s.vehicle.state_bounds[name]
        if lo != float("-inf") or hi != float("inf"):
            bounds[key] = _pair((lo, hi))
    sv = s.solver
    return {
        "version": SCHEMA_VERSION,
        "name": s.name,
        "duration_s": s.duration,
        "v_bar_mps": s.v_bar,
        "lanes": {
            "lines": lines,
            "centers_m": list(s.lane_centers),
            "rightmost_index": s.rightmost_index,
        },
        "ego": {"x_m": s.ego_initial.x, "y_m": s.ego_initial.y,
                "theta_rad": s.ego_initial.theta, "v_mps": s.ego_initial.v},
        "objects": objects,
        "mpc": {
            "ts_s": m.ts,
            "horizon": m.horizon,
            "input_weight": list(m.weights.input_weight),
            "terminal_weight": list(m.weights.terminal_weight),
            "stage_weight": list(m.weights.stage_weight),
            "infra_amplitude": m.infra.amplitude_AI,
            "infra_sigma_m": m.infra.sigma,
            "object_amplitude": m.object_risk.amplitude_AO,
            "object_sigma_x_m": m.object_risk.sigma_x,
            "object_sigma_y_m": m.object_risk.sigma_y,
            "state_penalty_weight": m.penalty_weight,
        },
        "solver": {
            "max_iterations": sv.max_iterations,
            "grad_tolerance": sv.grad_tolerance,
            "time_budget_s": sv.time_budget,
            "shrink": sv.shrink,
            "sufficient_decrease": sv.sufficient_decrease,
            "warm_start": sv.warm_start,
            "memory": sv.memory,
            "max_backtracks": sv.max_backtracks,
            "max_evaluations": sv.max_evaluations,
            "initial_step": sv.initial_step,
            "max_step": sv.max_step,
        },
        "vehicle": {"wheelbase_m": s.vehicle.wheelbase_L},
        "bounds": bounds,
    }


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False, default_flow_style=None)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load a scenario from a file path or a shipped fixture name."""
    p = Path(path)
    if not p.exists() and str(path) in fixture_names():
        return parse_scenario(fixture_text(str(path)))
    try:
        text = p.read_text()
    except OSError as err:
        raise ScenarioError(f"cannot read scenario {path}: {err.strerror}") from None
    return parse_scenario(text)


def fixture_names() -> list[str]:
    files = resources.files(FIXTURE_PACKAGE).iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def fixture_text(name: str) -> str:
    return resources.files(FIXTURE_PACKAGE).joinpath(f"{name}.yaml").read_text()


def load_fixture(name: str) -> Scenario:
    if name not in fixture_names():
        raise ScenarioError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return parse_scenario(fixture_text(name))
