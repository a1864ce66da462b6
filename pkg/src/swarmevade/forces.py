"""Virtual-force control law: cohesion, separation, alignment, escape, following.

All functions are pure. Per-neighbor forces are arithmetic means over the
observation list and return the exact zero vector for an empty list (no
observation, no interaction). Profile functions are continuous across their
branch boundaries by construction of the offset terms.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional, Sequence

import numpy as np

from .params import K_PA, VIRTUAL_MASS, SwarmParams
from .types import AgentState, Mode, Observation, vec3

# Below this speed a velocity direction is considered undefined.
SPEED_TOLERANCE = 1e-6

_X_AXIS = np.array([1.0, 0.0, 0.0])


def cohesion_profile(dist: float, params: SwarmParams) -> float:
    """Attraction weight toward a neighbor at center distance ``dist``.

    Zero inside the onset band, quadratic growth up to the switch distance,
    then logarithmic growth (offset so both branches meet).
    """
    p = dist - params.l
    if p <= params.d_min:
        return 0.0
    if p <= params.d_c:
        return params.k1c * (p - params.d_min) ** 2
    offset = params.k1c * (params.d_c - params.d_min) ** 2
    return params.k2c * math.log(params.k3c * (p - params.d_c) + 1.0) + offset


def separation_profile(dist: float, params: SwarmParams) -> float:
    """Repulsion weight from a neighbor at center distance ``dist``.

    The working distance is floored at l_min, so the weight saturates for
    near-contact geometry instead of diverging. Steep inverse-sqrt growth
    below d_s, quadratic up to the d_max cutoff, zero beyond.
    """
    p = max(dist - params.l, params.l_min)
    if p >= params.d_max:
        return 0.0
    if p > params.d_s:
        return params.k1s * (p - params.d_max) ** 2
    offset = params.k1s * (params.d_s - params.d_max) ** 2 - params.k2s * (
        1.0 / math.sqrt(params.d_s) - 1.0 / math.sqrt(params.d_max)
    )
    return params.k2s * (1.0 / math.sqrt(p) - 1.0 / math.sqrt(params.d_max)) + offset


def escape_profile(dist: float, params: SwarmParams) -> float:
    """Repulsion weight from an interferer at center distance ``dist``.

    Inverse-sqrt growth below the d_e2 cutoff (floored at l_min), zero beyond.
    """
    p = max(dist - params.l, params.l_min)
    if p >= params.d_e2:
        return 0.0
    return params.k_e * (1.0 / math.sqrt(p) - 1.0 / math.sqrt(params.d_e2))


def following_weight(speed: float, params: SwarmParams) -> float:
    """Weight of a neighbor's movement direction in the following force."""
    return params.k_f * math.log(params.k_v * speed + params.d_f)


def cohesion_force(neighbors: Sequence[Observation], params: SwarmParams) -> np.ndarray:
    """Mean attraction toward observed neighbors (zero-length offsets skipped)."""
    if not neighbors:
        return vec3()
    total = vec3()
    for obs in neighbors:
        d = obs.distance
        if d < 1e-12:
            continue
        total += cohesion_profile(d, params) * (obs.relative_position / d)
    return total / len(neighbors)


def separation_force(neighbors: Sequence[Observation], params: SwarmParams) -> np.ndarray:
    """Mean repulsion away from observed neighbors."""
    if not neighbors:
        return vec3()
    total = vec3()
    for obs in neighbors:
        d = obs.distance
        if d < 1e-12:
            continue
        total += separation_profile(d, params) * (obs.relative_position / d)
    return -total / len(neighbors)


def alignment_force(neighbors: Sequence[Observation], params: SwarmParams) -> np.ndarray:
    """Mean of neighbors' velocities, scaled by the alignment gain."""
    if not neighbors:
        return vec3()
    total = vec3()
    for obs in neighbors:
        total += obs.estimated_velocity
    return params.k_a * total / len(neighbors)


def escape_force(
    interferers: Sequence[Observation],
    params: SwarmParams,
    last_directions: Optional[Mapping[str, np.ndarray]] = None,
) -> np.ndarray:
    """Mean repulsion away from observed interferers.

    A zero-length relative position leaves the direction undefined while the
    repulsion is maximal; in that case the last known direction toward that
    interferer is used (+x if none was ever seen).
    """
    if not interferers:
        return vec3()
    total = vec3()
    for obs in interferers:
        d = obs.distance
        if d < 1e-12:
            direction = _X_AXIS
            if last_directions is not None and obs.source_id in last_directions:
                direction = last_directions[obs.source_id]
            total += escape_profile(0.0, params) * direction
        else:
            total += escape_profile(d, params) * (obs.relative_position / d)
    return -total / len(interferers)


def following_force(neighbors: Sequence[Observation], params: SwarmParams) -> np.ndarray:
    """Mean pull along neighbors' movement directions.

    Neighbors slower than the speed tolerance have no defined direction and
    are skipped.
    """
    if not neighbors:
        return vec3()
    total = vec3()
    for obs in neighbors:
        speed = float(np.linalg.norm(obs.estimated_velocity))
        if speed < SPEED_TOLERANCE:
            continue
        total += following_weight(speed, params) * (obs.estimated_velocity / speed)
    return total / len(neighbors)


def total_force(
    mode: Mode,
    neighbors: Sequence[Observation],
    interferers: Sequence[Observation],
    params: SwarmParams,
    last_directions: Optional[Mapping[str, np.ndarray]] = None,
) -> np.ndarray:
    """Per-mode combination of the virtual forces.

    Normal: cohesion + separation + alignment.
    Active: the same plus the escape force from detected interferers.
    Passive: cohesion/separation with scaled gains, plus the following force.
    """
    if mode is Mode.PASSIVE:
        scaled = params.scaled_for_passive()
        base = (
            cohesion_force(neighbors, scaled)
            + separation_force(neighbors, scaled)
            + alignment_force(neighbors, params)
        )
        return base + following_force(neighbors, params)
    base = (
        cohesion_force(neighbors, params)
        + separation_force(neighbors, params)
        + alignment_force(neighbors, params)
    )
    if mode is Mode.ACTIVE:
        return base + escape_force(interferers, params, last_directions)
    return base


def desired_position(
    state: AgentState, force: np.ndarray, dt: float, params: SwarmParams
) -> np.ndarray:
    """One-step desired position from linear motion under the virtual force."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    accel = force / VIRTUAL_MASS
    return state.position + state.velocity * dt + 0.5 * K_PA * accel * dt * dt
