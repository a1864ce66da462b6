"""Fixed-step world loop.

Every step runs the same documented sequence against a snapshot of the
previous step, in agent-id order, so trajectories are independent of input
ordering and bit-reproducible under a seed:

    sense -> protocol sensor update -> deliver due messages ->
    protocol message handling (forwards rebroadcast) -> periodic
    rebroadcast -> per-mode total force -> desired position -> motion
    (skipped when frozen) -> interferer policies -> metrics row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import forces, protocol
from .metrics import RunRecord, StepRow
from .network import Network, build_graph
from .params import SwarmParams
from .protocol import ProtocolState
from .scenario import InterfererPolicy, PolicyKind, ScenarioConfig, SensingConfig
from .types import AgentState, ConfigError, Mode, Observation, ObservationKind, clamp_norm, vec3

_X_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass
class SimAgent:
    """One swarm agent: kinematic state, protocol state, observer memory."""

    state: AgentState
    proto: ProtocolState
    facing: np.ndarray = field(default_factory=lambda: _X_AXIS.copy())
    last_seen: dict = field(default_factory=dict)       # id -> (step, position)
    vel_estimates: dict = field(default_factory=dict)   # id -> smoothed velocity
    escape_dirs: dict = field(default_factory=dict)     # interferer id -> unit vector
    last_detected: dict = field(default_factory=dict)   # interferer id -> bool
    last_raw_hit: dict = field(default_factory=dict)    # interferer id -> time of last sighting

    @property
    def id(self) -> str:
        return self.state.id


@dataclass
class Interferer:
    id: str
    position: np.ndarray
    velocity: np.ndarray
    policy: InterfererPolicy
    command: np.ndarray = field(default_factory=vec3)   # external-policy velocity
    waypoint_index: int = 0


@dataclass
class World:
    config: ScenarioConfig
    agents: list[SimAgent]
    interferers: list[Interferer]
    net: Network
    rng: np.random.Generator
    record: RunRecord
    step: int = 0
    frozen: bool = False

    def __post_init__(self):
        self._by_id = {a.id: a for a in self.agents}

    @property
    def time(self) -> float:
        return self.step * self.config.dt

    @property
    def params(self) -> SwarmParams:
        return self.config.params

    def agent_positions(self) -> dict[str, np.ndarray]:
        return {a.id: a.state.position for a in self.agents}

    def swarm_centroid(self) -> np.ndarray:
        return np.mean([a.state.position for a in self.agents], axis=0)


def build_world(config: ScenarioConfig) -> World:
    known = frozenset(spec.id for spec in config.agents)
    agents = []
    for spec in sorted(config.agents, key=lambda s: s.id):
        state = AgentState(spec.id, spec.position.copy(), spec.velocity.copy())
        proto = ProtocolState(spec.id, known, config.params.d_e1, config.params.d_e2)
        facing = _X_AXIS.copy()
        if float(np.linalg.norm(spec.velocity)) >= forces.SPEED_TOLERANCE:
            facing = spec.velocity / np.linalg.norm(spec.velocity)
        agents.append(SimAgent(state, proto, facing))
    interferers = [
        Interferer(spec.id, spec.position.copy(), vec3(), spec.policy)
        for spec in sorted(config.interferers, key=lambda s: s.id)
    ]
    world = World(
        config=config,
        agents=agents,
        interferers=interferers,
        net=Network(config.net),
        rng=np.random.Generator(np.random.PCG64(config.seed)),
        record=RunRecord(),
        frozen=config.frozen,
    )
    _record_row(world)
    return world


def sense(
    agent: SimAgent, world: World, snapshot: "Snapshot", need_neighbors: bool = True
) -> tuple[list[Observation], list[Observation]]:
    """Range/FOV/probability-limited observations from the previous snapshot.

    Neighbor visibility is range-only (the interaction radius r_b applies as
    an outer filter on top of the sensor range). Interferers must also fall
    inside the field-of-view cone around the movement direction and pass the
    per-step detection trial.
    """
    cfg = world.config.sensing
    p_self = snapshot.positions[agent.id]
    row = snapshot.row_of[agent.id]
    neighbor_limit = min(cfg.neighbor_range, world.params.r_b)

    neighbors = []
    if need_neighbors:
        in_range = np.nonzero(snapshot.agent_dists[row] <= neighbor_limit)[0]
        for k in in_range:
            other_id = snapshot.agent_ids[k]
            if other_id == agent.id:
                continue
            rel = snapshot.positions[other_id] - p_self
            est = _update_estimate(agent, other_id, snapshot.positions[other_id], world)
            neighbors.append(Observation(rel, est, ObservationKind.NEIGHBOR, other_id))

    interferers = []
    allowed = cfg.detectable_by is None or agent.id in cfg.detectable_by
    if allowed:
        for k, intr_id in enumerate(snapshot.interferer_ids):
            dist = float(snapshot.interferer_dists[row, k])
            if dist > cfg.interferer_range:
                continue
            rel = snapshot.interferer_positions[intr_id] - p_self
            raw_hit = _in_fov(rel, dist, agent.facing, cfg.fov_half_angle) and (
                cfg.detection_probability >= 1
                or world.rng.random() < cfg.detection_probability
            )
            if raw_hit:
                agent.last_raw_hit[intr_id] = world.time
            elif world.time - agent.last_raw_hit.get(intr_id, -math.inf) > cfg.track_hold_s:
                # No live sighting and the track has coasted past its hold.
                continue
            est = _update_estimate(agent, intr_id, snapshot.interferer_positions[intr_id], world)
            interferers.append(Observation(rel, est, ObservationKind.INTERFERER, intr_id))
            if dist >= 1e-12:
                agent.escape_dirs[intr_id] = rel / dist
    return neighbors, interferers


def _in_fov(rel: np.ndarray, dist: float, facing: np.ndarray, half_angle: float) -> bool:
    if half_angle >= math.pi - 1e-12:
        return True
    if dist < 1e-12:
        return True
    cos_angle = float(np.dot(rel, facing)) / dist
    return cos_angle >= math.cos(half_angle)


def _update_estimate(agent: SimAgent, other_id: str, pos: np.ndarray, world: World) -> np.ndarray:
    """Finite-difference velocity from observed positions, exponentially smoothed."""
    alpha = world.config.sensing.velocity_smoothing
    prev = agent.last_seen.get(other_id)
    agent.last_seen[other_id] = (world.step, pos.copy())
    if prev is None:
        est = vec3()
    else:
        prev_step, prev_pos = prev
        gap = (world.step - prev_step) * world.config.dt
        raw = (pos - prev_pos) / gap if gap > 0 else vec3()
        old = agent.vel_estimates.get(other_id)
        est = raw if old is None else alpha * raw + (1 - alpha) * old
    agent.vel_estimates[other_id] = est
    return est


def apply_motion(
    state: AgentState, desired: np.ndarray, dt: float, params: SwarmParams, two_d: bool
) -> None:
    """Clamped point-mass tracking of the desired position.

    The commanded velocity is the one-step velocity toward the target scaled
    by the tracking gain, then rate-limited by a_max and capped at v_max.
    """
    v_cmd = params.tracking_gain * (desired - state.position) / dt
    dv = clamp_norm(v_cmd - state.velocity, params.a_max * dt)
    v_new = clamp_norm(state.velocity + dv, params.v_max)
    if two_d:
        v_new = v_new.copy()
        v_new[2] = 0.0
    state.velocity = v_new
    state.position = state.position + v_new * dt


def pursuit_velocity(intr: Interferer, world: World) -> np.ndarray:
    """Full speed toward the swarm centroid (or nearest agent) until stop time."""
    policy = intr.policy
    max_speed = policy.resolved_max_speed(world.params.v_max)
    if policy.stop_at_s is not None and world.time >= policy.stop_at_s:
        return vec3()
    if policy.target == "nearest":
        target = min(
            (a.state.position for a in world.agents),
            key=lambda p: float(np.linalg.norm(p - intr.position)),
        )
    else:
        target = world.swarm_centroid()
    direction = target - intr.position
    dist = float(np.linalg.norm(direction))
    if dist < 1e-9:
        return vec3()
    return direction / dist * max_speed


def _scripted_velocity(intr: Interferer, world: World) -> np.ndarray:
    policy = intr.policy
    max_speed = policy.resolved_max_speed(world.params.v_max)
    if policy.stop_at_s is not None and world.time >= policy.stop_at_s:
        return vec3()
    if policy.schedule:
        current = vec3()
        for t, vel in policy.schedule:
            if world.time >= t - 1e-9:
                current = vel
        return clamp_norm(current, max_speed)
    while intr.waypoint_index < len(policy.waypoints):
        waypoint = policy.waypoints[intr.waypoint_index]
        direction = waypoint - intr.position
        dist = float(np.linalg.norm(direction))
        if dist > max_speed * world.config.dt:
            return direction / dist * max_speed
        intr.waypoint_index += 1
    return vec3()


def _interferer_velocity(intr: Interferer, world: World) -> np.ndarray:
    policy = intr.policy
    hard_cap = 0.9 * world.params.v_max
    if policy.kind == PolicyKind.PURSUIT:
        v = pursuit_velocity(intr, world)
    elif policy.kind == PolicyKind.SCRIPTED:
        v = _scripted_velocity(intr, world)
    else:
        v = clamp_norm(intr.command, policy.resolved_max_speed(world.params.v_max))
    return clamp_norm(v, hard_cap)


@dataclass
class Snapshot:
    agent_ids: list[str]
    positions: dict[str, np.ndarray]
    velocities: dict[str, np.ndarray]
    interferer_ids: list[str]
    interferer_positions: dict[str, np.ndarray]
    agent_dists: np.ndarray        # (n, n) pairwise agent distances
    interferer_dists: np.ndarray   # (n, m) agent-to-interferer distances
    row_of: dict[str, int]


def _snapshot(world: World) -> Snapshot:
    pos = np.array([a.state.position for a in world.agents])
    ipos = np.array([i.position for i in world.interferers]).reshape(-1, 3)
    diff = pos[:, None, :] - pos[None, :, :]
    agent_dists = np.sqrt((diff ** 2).sum(-1))
    idiff = pos[:, None, :] - ipos[None, :, :]
    interferer_dists = np.sqrt((idiff ** 2).sum(-1))
    return Snapshot(
        agent_ids=[a.id for a in world.agents],
        positions={a.id: pos[k].copy() for k, a in enumerate(world.agents)},
        velocities={a.id: a.state.velocity.copy() for a in world.agents},
        interferer_ids=[i.id for i in world.interferers],
        interferer_positions={i.id: ipos[k].copy() for k, i in enumerate(world.interferers)},
        agent_dists=agent_dists,
        interferer_dists=interferer_dists,
        row_of={a.id: k for k, a in enumerate(world.agents)},
    )


def _record_row(world: World) -> None:
    world.record.add_row(StepRow(
        time=world.time,
        agent_ids=tuple(a.id for a in world.agents),
        positions=np.array([a.state.position for a in world.agents]),
        modes=tuple(a.proto.mode for a in world.agents),
        interferer_ids=tuple(i.id for i in world.interferers),
        interferer_positions=(
            np.array([i.position for i in world.interferers]).reshape(-1, 3)
        ),
    ))


def step_world(world: World) -> World:
    """Advance the world by one control step (see module docstring for order)."""
    config = world.config
    if config.dt <= 0:
        raise ConfigError("dt must be positive")
    now = world.time
    snapshot = _snapshot(world)
    # Rebuilt from current positions each step; only needed for messaging.
    graph = build_graph(snapshot.positions, config.net) if config.evasion_enabled else {}

    # Sense and protocol sensor update, id order. A "detection" event is an
    # interferer observed inside the unsafe distance d_e1 (the same condition
    # that triggers Active mode), logged on its rising edge per interferer.
    observations: dict[str, tuple[list[Observation], list[Observation]]] = {}
    outbox: list[tuple[str, protocol.AlertMessage]] = []
    for agent in world.agents:
        neighbors, interferers = sense(agent, world, snapshot,
                                       need_neighbors=not world.frozen)
        observations[agent.id] = (neighbors, interferers)
        unsafe = {o.source_id for o in interferers if o.distance < config.params.d_e1}
        for intr_id in unsafe:
            if not agent.last_detected.get(intr_id, False):
                world.record.log_event(now, "detection", agent.id)
        for intr_id in snapshot.interferer_ids:
            agent.last_detected[intr_id] = intr_id in unsafe
        if config.evasion_enabled:
            before = agent.proto.mode
            for msg in protocol.on_sensor_update(agent.proto, interferers, now):
                outbox.append((agent.id, msg))
            _log_mode_change(world, agent, before, now)

    # Deliver due messages, then handle them (forwards go out this step).
    if config.evasion_enabled:
        for item in world.net.collect_due(world.step):
            receiver = _agent_by_id(world, item.receiver_id)
            if receiver is None:
                continue
            before = receiver.proto.mode
            forward, correction = protocol.on_message(receiver.proto, item.payload, now)
            _log_mode_change(world, receiver, before, now)
            if forward is not None:
                outbox.append((receiver.id, forward))
            if correction is not None:
                outbox.append((receiver.id, correction))

        for agent in world.agents:
            msg = protocol.periodic_rebroadcast(agent.proto, now)
            if msg is not None:
                outbox.append((agent.id, msg))

        for sender_id, msg in outbox:
            world.net.send(sender_id, msg, graph, world.step)

    # Control and motion.
    if not world.frozen:
        for agent in world.agents:
            neighbors, interferers = observations[agent.id]
            if config.evasion_enabled:
                force = forces.total_force(
                    agent.proto.mode, neighbors, interferers,
                    config.params, agent.escape_dirs,
                )
            else:
                # Baseline comparison: the interferer enters the separation
                # term like another swarm member; no mode machinery.
                force = (
                    forces.cohesion_force(neighbors, config.params)
                    + forces.separation_force(neighbors + interferers, config.params)
                    + forces.alignment_force(neighbors, config.params)
                )
            if config.two_d:
                force = force.copy()
                force[2] = 0.0
            target = forces.desired_position(agent.state, force, config.dt, config.params)
            apply_motion(agent.state, target, config.dt, config.params, config.two_d)
            speed = float(np.linalg.norm(agent.state.velocity))
            if speed >= forces.SPEED_TOLERANCE:
                agent.facing = agent.state.velocity / speed

    # Interferer kinematics.
    for intr in world.interferers:
        intr.velocity = _interferer_velocity(intr, world)
        if config.two_d:
            intr.velocity[2] = 0.0
        intr.position = intr.position + intr.velocity * config.dt

    world.step += 1
    for agent in world.agents:
        agent.state.mode = agent.proto.mode
    _record_row(world)
    return world


def _agent_by_id(world: World, agent_id: str) -> Optional[SimAgent]:
    return world._by_id.get(agent_id)


def _log_mode_change(world: World, agent: SimAgent, before: Mode, now: float) -> None:
    after = agent.proto.mode
    if after is not before:
        world.record.log_event(now, f"mode_{after.value}", agent.id)


def run_scenario(config: ScenarioConfig) -> World:
    world = build_world(config)
    for _ in range(config.n_steps):
        step_world(world)
    return world
