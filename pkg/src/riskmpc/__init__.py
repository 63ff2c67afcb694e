"""Risk-field model predictive trajectory planning with a closed-loop simulator."""

from .ocp import OcpProblem, OcpSolution, OcpWeights, total_cost
from .risk import InfraRiskParams, LaneLine, ObjectRiskParams, ObjectState, sample_field
from .scenario import ScenarioError, load_fixture, load_scenario, parse_scenario
from .sim import Scenario, SimLog, metrics, run
from .solver import SolverConfig, SolveReport, solve
from .vehicle import ControlInput, VehicleParams, VehicleState, rollout, step

__version__ = "0.1.0"

__all__ = [
    "ControlInput", "InfraRiskParams", "LaneLine", "ObjectRiskParams", "ObjectState",
    "OcpProblem", "OcpSolution", "OcpWeights", "Scenario", "ScenarioError", "SimLog",
    "SolveReport", "SolverConfig", "VehicleParams", "VehicleState", "load_fixture",
    "load_scenario", "metrics", "parse_scenario", "rollout", "run", "sample_field", "solve",
    "step", "total_cost",
]
