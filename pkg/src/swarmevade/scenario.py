"""Scenario files: strict JSON schema for one simulation run."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import NetConfig
from .params import SwarmParams
from .types import ConfigError, ParameterError, as_vec3


@dataclass(frozen=True)
class SensingConfig:
    """Synthetic onboard sensing limits.

    Neighbors are seen by range alone; interferers additionally require the
    field-of-view cone around the movement direction and a per-step
    detection Bernoulli trial. detectable_by restricts which agents may
    sense interferers at all (used by the shock study to pin the detector);
    it is not part of the scenario file schema.
    """

    neighbor_range: float = 8.0
    interferer_range: float = 12.0
    fov_half_angle: float = math.pi
    detection_probability: float = 1.0
    velocity_smoothing: float = 0.5
    track_hold_s: float = 0.5
    detectable_by: Optional[frozenset] = None

    def __post_init__(self):
        if not self.neighbor_range > 0 or not self.interferer_range > 0:
            raise ParameterError("sensing ranges must be positive")
        if not 0 < self.fov_half_angle <= math.pi:
            raise ParameterError("fov_half_angle must be in (0, pi]")
        if not 0 <= self.detection_probability <= 1:
            raise ParameterError("detection_probability must be in [0, 1]")
        if not 0 < self.velocity_smoothing <= 1:
            raise ParameterError("velocity_smoothing must be in (0, 1]")
        if self.track_hold_s < 0:
            raise ParameterError("track_hold_s must be >= 0")


class PolicyKind:
    PURSUIT = "pursuit"
    SCRIPTED = "scripted"
    EXTERNAL = "external"

    ALL = (PURSUIT, SCRIPTED, EXTERNAL)


@dataclass(frozen=True)
class InterfererPolicy:
    kind: str = PolicyKind.PURSUIT
    max_speed: Optional[float] = None  # None: 0.9 x swarm v_max
    target: str = "centroid"           # or "nearest"
    stop_at_s: Optional[float] = None
    waypoints: tuple = ()
    schedule: tuple = ()               # ((t, velocity vec3), ...) piecewise-constant

    def __post_init__(self):
        if self.kind not in PolicyKind.ALL:
            raise ConfigError(f"unknown interferer policy kind {self.kind!r}")
        if self.target not in ("centroid", "nearest"):
            raise ConfigError(f"unknown pursuit target {self.target!r}")
        if self.max_speed is not None and self.max_speed <= 0:
            raise ConfigError("interferer max_speed must be positive")

    def resolved_max_speed(self, swarm_v_max: float) -> float:
        cap = 0.9 * swarm_v_max
        if self.max_speed is None:
            return cap
        return min(self.max_speed, cap)


@dataclass(frozen=True)
class AgentSpec:
    id: str
    position: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True)
class InterfererSpec:
    id: str
    position: np.ndarray
    policy: InterfererPolicy


@dataclass(frozen=True)
class ScenarioConfig:
    agents: tuple[AgentSpec, ...]
    interferers: tuple[InterfererSpec, ...]
    duration_s: float
    params: SwarmParams = SwarmParams()
    net: NetConfig = NetConfig()
    sensing: SensingConfig = SensingConfig()
    dt: float = 0.1
    evasion_enabled: bool = True
    frozen: bool = False
    seed: int = 0
    two_d: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.duration_s < 0:
            raise ConfigError("duration_s must be >= 0")
        ids = [a.id for a in self.agents] + [i.id for i in self.interferers]
        if len(set(ids)) != len(ids):
            raise ConfigError("agent/interferer ids must be unique")
        if not self.agents:
            raise ConfigError("scenario needs at least one agent")
        for spec in self.interferers:
            if spec.policy.kind == PolicyKind.PURSUIT and spec.policy.max_speed is not None:
                if spec.policy.max_speed > 0.9 * self.params.v_max + 1e-12:
                    raise ConfigError(
                        "pursuit interferer max_speed must be <= 0.9 x swarm v_max"
                    )

    @property
    def n_steps(self) -> int:
        return int(round(self.duration_s / self.dt))

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)


def _require_keys(obj: dict, allowed: set, context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")


def _parse_policy(obj: dict) -> InterfererPolicy:
    _require_keys(obj, {"kind", "max_speed", "target", "stop_at_s", "waypoints", "schedule"},
                  "interferer policy")
    waypoints = tuple(as_vec3(w) for w in obj.get("waypoints", []))
    schedule = []
    for entry in obj.get("schedule", []):
        _require_keys(entry, {"t", "velocity"}, "schedule entry")
        schedule.append((float(entry["t"]), as_vec3(entry["velocity"])))
    times = [t for t, _ in schedule]
    if times != sorted(times):
        raise ConfigError("schedule entries must be time-ordered")
    return InterfererPolicy(
        kind=obj.get("kind", PolicyKind.PURSUIT),
        max_speed=obj.get("max_speed"),
        target=obj.get("target", "centroid"),
        stop_at_s=obj.get("stop_at_s"),
        waypoints=waypoints,
        schedule=tuple(schedule),
    )


def parse_scenario(obj: dict) -> ScenarioConfig:
    """Validate and build a ScenarioConfig from a parsed JSON document.

    Positions may be 2-vectors (fixed-altitude scenario, the default study
    setup) or 3-vectors; mixing is rejected. Unknown keys anywhere are
    configuration errors.
    """
    if not isinstance(obj, dict):
        raise ConfigError("scenario root must be an object")
    _require_keys(obj, {"agents", "interferers", "params", "net", "sensing",
                        "dt", "duration_s", "evasion_enabled", "frozen", "seed"},
                  "scenario")
    for required in ("agents", "duration_s"):
        if required not in obj:
            raise ConfigError(f"scenario is missing required key {required!r}")

    dims = set()

    def coerce(pos) -> np.ndarray:
        dims.add(len(pos))
        return as_vec3(pos)

    agents = []
    for entry in obj["agents"]:
        _require_keys(entry, {"id", "position", "velocity"}, "agent entry")
        if "id" not in entry or "position" not in entry:
            raise ConfigError("agent entries require id and position")
        agents.append(AgentSpec(
            id=str(entry["id"]),
            position=coerce(entry["position"]),
            velocity=as_vec3(entry["velocity"]) if "velocity" in entry else as_vec3([0, 0, 0]),
        ))

    interferers = []
    for entry in obj.get("interferers", []):
        _require_keys(entry, {"id", "position", "policy"}, "interferer entry")
        if "id" not in entry or "position" not in entry:
            raise ConfigError("interferer entries require id and position")
        interferers.append(InterfererSpec(
            id=str(entry["id"]),
            position=coerce(entry["position"]),
            policy=_parse_policy(entry.get("policy", {})),
        ))

    if len(dims) > 1:
        raise ConfigError("all positions must have the same dimensionality")
    two_d = dims == {2} or not dims

    try:
        params = SwarmParams().replace(**obj.get("params", {}))
        seed = int(obj.get("seed", 0))
        net_obj = dict(obj.get("net", {}))
        _require_keys(net_obj, {"comm_range", "hop_latency", "drop_probability", "seed"}, "net")
        net_obj.setdefault("seed", seed)
        net = NetConfig(**net_obj)
        sensing_obj = dict(obj.get("sensing", {}))
        _require_keys(sensing_obj, {"neighbor_range", "interferer_range", "fov_half_angle",
                                    "detection_probability", "velocity_smoothing",
                                    "track_hold_s"}, "sensing")
        sensing = SensingConfig(**sensing_obj)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    return ScenarioConfig(
        agents=tuple(agents),
        interferers=tuple(interferers),
        duration_s=float(obj["duration_s"]),
        params=params,
        net=net,
        sensing=sensing,
        dt=float(obj.get("dt", 0.1)),
        evasion_enabled=bool(obj.get("evasion_enabled", True)),
        frozen=bool(obj.get("frozen", False)),
        seed=seed,
        two_d=two_d,
    )


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_scenario(obj)


def _vec_to_list(v: np.ndarray, two_d: bool) -> list[float]:
    return [float(x) for x in (v[:2] if two_d else v)]


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Serialize back to the scenario file schema (parse round-trips)."""
    two_d = config.two_d
    out: dict = {
        "agents": [
            {"id": a.id, "position": _vec_to_list(a.position, two_d),
             "velocity": _vec_to_list(a.velocity, two_d)}
            for a in config.agents
        ],
        "interferers": [],
        "params": {k: getattr(config.params, k) for k in (
            "l", "l_min", "d_min", "d_c", "k1c", "k2c", "k3c", "d_s", "d_max",
            "k1s", "k2s", "k_a", "d_e1", "d_e2", "k_e", "k_f", "k_v", "d_f",
            "passive_gain_scale", "r_b", "v_max", "a_max", "tracking_gain",
        )},
        "net": {
            "comm_range": config.net.comm_range,
            "hop_latency": config.net.hop_latency,
            "drop_probability": config.net.drop_probability,
            "seed": config.net.seed,
        },
        "sensing": {
            "neighbor_range": config.sensing.neighbor_range,
            "interferer_range": config.sensing.interferer_range,
            "fov_half_angle": config.sensing.fov_half_angle,
            "detection_probability": config.sensing.detection_probability,
            "velocity_smoothing": config.sensing.velocity_smoothing,
            "track_hold_s": config.sensing.track_hold_s,
        },
        "dt": config.dt,
        "duration_s": config.duration_s,
        "evasion_enabled": config.evasion_enabled,
        "frozen": config.frozen,
        "seed": config.seed,
    }
    for spec in config.interferers:
        policy: dict = {"kind": spec.policy.kind}
        if spec.policy.max_speed is not None:
            policy["max_speed"] = spec.policy.max_speed
        if spec.policy.target != "centroid":
            policy["target"] = spec.policy.target
        if spec.policy.stop_at_s is not None:
            policy["stop_at_s"] = spec.policy.stop_at_s
        if spec.policy.waypoints:
            policy["waypoints"] = [_vec_to_list(w, two_d) for w in spec.policy.waypoints]
        if spec.policy.schedule:
            policy["schedule"] = [
                {"t": t, "velocity": _vec_to_list(v, two_d)} for t, v in spec.policy.schedule
            ]
        out["interferers"].append({
            "id": spec.id,
            "position": _vec_to_list(spec.position, two_d),
            "policy": policy,
        })
    return out
