"""Deterministic UAV-swarm simulator with collective evasion and alert propagation."""

from .forces import (
    alignment_force,
    cohesion_force,
    cohesion_profile,
    desired_position,
    escape_force,
    escape_profile,
    following_force,
    following_weight,
    separation_force,
    separation_profile,
    total_force,
)
from .metrics import EventTimes, RunRecord, distance_stats, extract_event_times
from .network import NetConfig, Network, broadcast, build_graph, deliver_due
from .params import DEFAULT_PARAMS, SwarmParams
from .protocol import AlertMessage, ProtocolState, on_message, on_sensor_update, periodic_rebroadcast
from .scenario import ScenarioConfig, SensingConfig, load_scenario, parse_scenario
from .types import AgentState, Mode, Observation, ObservationKind, ParameterError, ConfigError

__all__ = [
    "AgentState", "AlertMessage", "ConfigError", "DEFAULT_PARAMS", "EventTimes",
    "Mode", "NetConfig", "Network", "Observation", "ObservationKind",
    "ParameterError", "ProtocolState", "RunRecord", "ScenarioConfig",
    "SensingConfig", "SwarmParams",
    "alignment_force", "broadcast", "build_graph", "cohesion_force",
    "cohesion_profile", "deliver_due", "desired_position", "distance_stats",
    "escape_force", "escape_profile", "extract_event_times", "following_force",
    "following_weight", "load_scenario", "on_message", "on_sensor_update",
    "parse_scenario", "periodic_rebroadcast", "separation_force",
    "separation_profile", "total_force",
]

__version__ = "0.1.0"
