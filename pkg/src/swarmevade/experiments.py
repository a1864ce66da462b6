"""Reproducible study setups: lattice settling, shock propagation, chase runs."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import World, build_world, step_world
from .metrics import nearest_neighbor_stats
from .network import NetConfig, build_graph
from .params import SwarmParams
from .scenario import (
    AgentSpec,
    InterfererPolicy,
    InterfererSpec,
    PolicyKind,
    ScenarioConfig,
    SensingConfig,
)
from .types import Mode, vec3


def spawn_in_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """n random 2-D points, uniform over a disc (z = 0)."""
    angles = rng.uniform(0, 2 * math.pi, n)
    radii = radius * np.sqrt(rng.uniform(0, 1, n))
    pts = np.zeros((n, 3))
    pts[:, 0] = radii * np.cos(angles)
    pts[:, 1] = radii * np.sin(angles)
    return pts


def spawn_in_ball(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """n random 3-D points, uniform over a ball."""
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts * radius * rng.uniform(0, 1, (n, 1)) ** (1 / 3)


def lattice_scenario(
    n_agents: int = 50,
    seed: int = 0,
    params: SwarmParams = SwarmParams(),
    spawn_radius: float = 11.0,
    settle_time_s: float = 240.0,
) -> ScenarioConfig:
    """Open-space swarm that contracts into a disc lattice at fixed altitude."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = spawn_in_disc(n_agents, spawn_radius, rng)
    agents = tuple(
        AgentSpec(f"uav{i:02d}", pts[i], vec3()) for i in range(n_agents)
    )
    return ScenarioConfig(
        agents=agents,
        interferers=(),
        duration_s=settle_time_s,
        params=params,
        net=NetConfig(seed=seed),
        sensing=SensingConfig(),
        evasion_enabled=False,
        seed=seed,
        two_d=True,
    )


def settled_lattice_positions(
    n_agents: int = 50,
    seed: int = 0,
    params: SwarmParams = SwarmParams(),
    spawn_radius: float = 11.0,
) -> np.ndarray:
    """Random spawn in a disc, relaxed to the lattice the force law defines."""
    rng = np.random.Generator(np.random.PCG64(seed))
    spawn = spawn_in_disc(n_agents, spawn_radius, rng)
    return relax_lattice(spawn, params, seed=seed)


def settle_lattice(
    config: ScenarioConfig,
    speed_tol: float = 0.01,
    quiet_steps: int = 50,
) -> World:
    """Run the swarm under the full control loop until it is nearly at rest."""
    world = build_world(config)
    quiet = 0
    for _ in range(config.n_steps):
        step_world(world)
        top_speed = max(float(np.linalg.norm(a.state.velocity)) for a in world.agents)
        quiet = quiet + 1 if top_speed < speed_tol else 0
        if quiet >= quiet_steps:
            break
    return world


def lattice_forces(positions: np.ndarray, params: SwarmParams) -> np.ndarray:
    """Cohesion+separation net force for every agent, vectorized over pairs.

    Matches the per-observation control-law functions exactly (tests assert
    this); used by the overdamped lattice relaxation where only the static
    force balance matters.
    """
    n = len(positions)
    diff = positions[None, :, :] - positions[:, None, :]   # diff[i, j] = p_j - p_i
    dist = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(dist, np.inf)

    p_c = dist - params.l
    delta_c = params.k1c * (params.d_c - params.d_min) ** 2
    with np.errstate(invalid="ignore"):
        eps = np.where(
            p_c <= params.d_min,
            0.0,
            np.where(
                p_c <= params.d_c,
                params.k1c * (p_c - params.d_min) ** 2,
                params.k2c * np.log(np.maximum(params.k3c * (p_c - params.d_c) + 1.0, 1.0))
                + delta_c,
            ),
        )

    p_s = np.maximum(dist - params.l, params.l_min)
    delta_s = params.k1s * (params.d_s - params.d_max) ** 2 - params.k2s * (
        1.0 / math.sqrt(params.d_s) - 1.0 / math.sqrt(params.d_max)
    )
    kappa = np.where(
        p_s >= params.d_max,
        0.0,
        np.where(
            p_s > params.d_s,
            params.k1s * (p_s - params.d_max) ** 2,
            params.k2s * (1.0 / np.sqrt(p_s) - 1.0 / math.sqrt(params.d_max)) + delta_s,
        ),
    )

    in_range = dist <= min(8.0, params.r_b)
    weight = np.where(in_range, eps - kappa, 0.0) / dist
    force = (weight[:, :, None] * diff).sum(axis=1)
    counts = in_range.sum(axis=1)
    counts = np.maximum(counts, 1)
    return force / counts[:, None]


def relax_lattice(
    positions: np.ndarray,
    params: SwarmParams,
    seed: int = 0,
    step_size: float = 0.05,
    force_tol: float = 1e-3,
    max_iters: int = 2500,
    anneal_schedule: Sequence[float] = (
        0.5, 0.45, 0.4, 0.35, 0.3, 0.3, 0.25, 0.25, 0.2, 0.2,
        0.15, 0.15, 0.1, 0.1, 0.05, 0.0,
    ),
) -> np.ndarray:
    """Overdamped relaxation with annealing jitter; returns equilibrium positions.

    The settled geometry is a zero of the same cohesion/separation law the
    control loop uses; the descent path (gradient flow plus shrinking random
    jitter, with stragglers pulled back toward the flock) is study
    scaffolding that removes lattice defects so spacing statistics are
    reproducible.
    """
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    pos = positions.copy()
    r_b = min(8.0, params.r_b)
    for amplitude in anneal_schedule:
        for _ in range(max_iters):
            force = lattice_forces(pos, params)
            force[:, 2] = 0.0
            if np.abs(force).max() < force_tol:
                break
            pos = pos + step_size * np.clip(force, -1.0, 1.0)
        # Recapture agents the jitter pushed out of interaction range.
        for i in range(len(pos)):
            d = np.linalg.norm(pos - pos[i], axis=1)
            d[i] = np.inf
            nearest = d.min()
            if nearest > 0.95 * r_b:
                centroid = np.delete(pos, i, axis=0).mean(axis=0)
                direction = centroid - pos[i]
                direction /= np.linalg.norm(direction)
                pos[i] = pos[i] + direction * (nearest - 0.6 * r_b)
        if amplitude > 0:
            jitter = rng.normal(size=pos.shape) * amplitude
            jitter[:, 2] = 0.0
            pos = pos + jitter
    return pos


@dataclass
class ShockResult:
    detector_id: str
    eccentricity: int
    awareness_steps: int
    clear_steps: Optional[int]
    spread_rows: list[tuple[int, int, int, int]]  # step, n_normal, n_active, n_passive
    lattice_mean: float
    lattice_min: float
    lattice_max: float
    positions: np.ndarray


def _mode_counts(world: World) -> tuple[int, int, int]:
    modes = [a.proto.mode for a in world.agents]
    return (
        sum(m is Mode.NORMAL for m in modes),
        sum(m is Mode.ACTIVE for m in modes),
        sum(m is Mode.PASSIVE for m in modes),
    )


def bfs_hops(adjacency: dict[str, list[str]], start: str) -> dict[str, int]:
    """Hop distance from start to every reachable node."""
    hops = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in adjacency[node]:
            if nxt not in hops:
                hops[nxt] = hops[node] + 1
                queue.append(nxt)
    return hops


def run_shock_study(
    positions: np.ndarray,
    params: SwarmParams = SwarmParams(),
    comm_range: float = 5.0,
    drop_probability: float = 0.0,
    net_seed: int = 0,
    interferer_offset: float = 6.0,
    max_steps: int = 400,
    dt: float = 0.1,
) -> ShockResult:
    """Freeze the settled swarm and watch one alert epidemic spread and clear.

    The interferer appears just outside the lattice, within the unsafe
    distance of exactly one agent (the detector, which is also the only
    agent allowed to sense it), stays until everyone is aware, and is then
    removed so the all-clear can propagate back.
    """
    positions = np.asarray(positions, dtype=float)
    mean_nn, min_nn, max_nn = nearest_neighbor_stats(positions)

    centroid = positions.mean(axis=0)
    radial = ((positions - centroid) ** 2).sum(-1)
    edge_pos = positions[int(np.argmax(radial))]
    direction = edge_pos - centroid
    direction = direction / np.linalg.norm(direction)
    spawn = edge_pos + direction * interferer_offset

    ids = [f"uav{i:02d}" for i in range(len(positions))]
    dists = np.linalg.norm(positions - spawn, axis=1)
    detector = ids[int(np.argmin(dists))]

    frozen_cfg = ScenarioConfig(
        agents=tuple(
            AgentSpec(ids[i], positions[i].copy(), vec3()) for i in range(len(positions))
        ),
        interferers=(InterfererSpec(
            "intruder", spawn,
            InterfererPolicy(kind=PolicyKind.SCRIPTED),
        ),),
        duration_s=max_steps * dt,
        params=params,
        net=NetConfig(comm_range=comm_range, hop_latency=1,
                      drop_probability=drop_probability, seed=net_seed),
        sensing=SensingConfig(detectable_by=frozenset({detector})),
        dt=dt,
        evasion_enabled=True,
        frozen=True,
        seed=net_seed,
        two_d=False,
    )
    world = build_world(frozen_cfg)

    graph = build_graph({a.id: a.state.position for a in world.agents},
                        NetConfig(comm_range=comm_range))
    hops = bfs_hops(graph, detector)
    eccentricity = max(hops.values())

    spread_rows = []
    awareness_steps = None
    clear_steps = None
    removal_step = None
    spread_rows.append((0, *_mode_counts(world)))
    for k in range(1, max_steps + 1):
        step_world(world)
        counts = _mode_counts(world)
        spread_rows.append((k, *counts))
        if awareness_steps is None and counts[0] == 0:
            awareness_steps = k
            # Let the lattice sit fully aware for two steps, then clear.
            removal_step = k + 2
        if removal_step is not None and k == removal_step:
            world.interferers.clear()
        if removal_step is not None and k > removal_step and counts == (len(world.agents), 0, 0):
            clear_steps = k - removal_step
            break

    if awareness_steps is not None:
        # Mode changes land one engine step after the hop that caused them;
        # express both spreads in message-hop steps.
        awareness_steps -= 1
        if clear_steps is not None:
            clear_steps -= 1

    return ShockResult(
        detector_id=detector,
        eccentricity=eccentricity,
        awareness_steps=awareness_steps if awareness_steps is not None else -1,
        clear_steps=clear_steps,
        spread_rows=spread_rows,
        lattice_mean=mean_nn,
        lattice_min=min_nn,
        lattice_max=max_nn,
        positions=positions,
    )


def equilibrium_spacing(params: SwarmParams) -> float:
    """Pairwise distance where cohesion and separation weights balance."""
    from .forces import cohesion_profile, separation_profile

    lo = params.l + params.d_min
    hi = params.l + params.d_max
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if cohesion_profile(mid, params) >= separation_profile(mid, params):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def triangle_positions(spacing: float = 2.9) -> list[np.ndarray]:
    h = spacing * math.sqrt(3) / 2
    return [vec3(0.0, spacing / 2), vec3(0.0, -spacing / 2), vec3(-h, 0.0)]


def fov_ratio_scenario(evasion: bool, seed: int = 7) -> ScenarioConfig:
    """Matched pair for reaction-time comparison under FOV-limited sensing.

    Agents face +x (a small initial nudge pins the view direction) with a
    90-degree half-angle cone. The interferer crosses the unsafe distance
    from behind, unseen, then orbits into the cone, so the crossing-to-
    detection delay is purely geometric and identical in both variants.
    """
    params = SwarmParams().replace(k1s=2.6)
    nudge = vec3(0.05, 0.0, 0.0)
    agents = tuple(
        AgentSpec(f"uav{i}", pos, nudge.copy())
        for i, pos in enumerate(triangle_positions(equilibrium_spacing(params)))
    )
    r = 6.0
    interferer = InterfererSpec(
        "intruder",
        vec3(-20.0, 0.0),
        InterfererPolicy(
            kind=PolicyKind.SCRIPTED,
            waypoints=(
                vec3(-r, 0.0),
                vec3(-r * 0.707, r * 0.707),
                vec3(0.0, r),
                vec3(r * 0.707, r * 0.707),
                vec3(2.0, 2.0),
                vec3(0.0, 0.0),
            ),
        ),
    )
    return ScenarioConfig(
        agents=agents,
        interferers=(interferer,),
        duration_s=40.0,
        params=params,
        net=NetConfig(seed=seed),
        sensing=SensingConfig(fov_half_angle=math.pi / 2),
        evasion_enabled=evasion,
        seed=seed,
        two_d=True,
    )


def chase_scenario(
    evasion: bool = True,
    duration_s: float = 85.0,
    stop_at_s: Optional[float] = 70.0,
    interferer_start: float = 25.0,
    seed: int = 7,
    detection_probability: float = 1.0,
    fov_half_angle: float = math.pi,
    params: Optional[SwarmParams] = None,
    interferer_range: float = 12.0,
) -> ScenarioConfig:
    """Three-agent swarm pursued from +x by one interferer (the study layout).

    The chase arena uses a stiffer separation gain than the shipped default
    (the same kind of per-experiment enlargement the comparison studies use)
    so the baseline swarm holds the interferer out instead of absorbing it.
    """
    if params is None:
        params = SwarmParams().replace(k1s=2.6)
    spacing = equilibrium_spacing(params)
    agents = tuple(
        AgentSpec(f"uav{i}", pos, vec3())
        for i, pos in enumerate(triangle_positions(spacing))
    )
    interferer = InterfererSpec(
        "intruder",
        vec3(interferer_start, 0.0),
        InterfererPolicy(kind=PolicyKind.PURSUIT, stop_at_s=stop_at_s),
    )
    return ScenarioConfig(
        agents=agents,
        interferers=(interferer,),
        duration_s=duration_s,
        params=params,
        net=NetConfig(seed=seed),
        sensing=SensingConfig(
            interferer_range=interferer_range,
            detection_probability=detection_probability,
            fov_half_angle=fov_half_angle,
        ),
        evasion_enabled=evasion,
        seed=seed,
        two_d=True,
    )
