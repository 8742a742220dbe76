"""Deterministic 2D differential-drive swarm simulator."""

from .adapters import AdapterError, AggregationAdapter, AggregationFamily, TaxisAdapter, TaxisFamily
from .geometry import (
    HIT_ROBOT,
    HIT_WALL,
    is_illuminated,
    neighbors_within,
    raycast_all,
    raycast_line_of_sight,
)
from .kinematics import (
    EPUCK_BODY_RADIUS_CM,
    EPUCK_MAX_SPEED_CMPS,
    EPUCK_WHEEL_BASE_CM,
    body_to_wheel,
    integrate_pose,
    normalize_angle,
    wheel_to_body,
)
from .metrics import UnionFind, cluster_fraction, taxis_metrics
from .rng import RNG_ALGORITHM, placement_stream, robot_stream
from .scenario import (
    ConfigError,
    ScenarioConfig,
    ScenarioResult,
    SimParams,
    SimulationFault,
    SwarmSimulation,
    atomic_write_bytes,
    atomic_write_text,
    make_simulation,
    run_scenario,
)
from .world import RobotBody, World

__all__ = [
    "AdapterError", "AggregationAdapter", "AggregationFamily", "TaxisAdapter",
    "TaxisFamily",
    "HIT_ROBOT", "HIT_WALL", "is_illuminated", "neighbors_within",
    "raycast_all", "raycast_line_of_sight",
    "EPUCK_BODY_RADIUS_CM", "EPUCK_MAX_SPEED_CMPS", "EPUCK_WHEEL_BASE_CM",
    "body_to_wheel", "integrate_pose", "normalize_angle", "wheel_to_body",
    "UnionFind", "cluster_fraction", "taxis_metrics",
    "RNG_ALGORITHM", "placement_stream", "robot_stream",
    "ConfigError", "ScenarioConfig", "ScenarioResult", "SimParams",
    "SimulationFault", "SwarmSimulation", "atomic_write_bytes",
    "atomic_write_text", "make_simulation", "run_scenario",
    "RobotBody", "World",
]
