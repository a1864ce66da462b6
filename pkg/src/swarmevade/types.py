"""Shared domain types: vectors, agent state, observations, errors."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """A control-law or network parameter violates its documented bounds."""


class ConfigError(ValueError):
    """A scenario or run configuration is malformed."""


def vec3(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def as_vec3(value) -> np.ndarray:
    """Coerce a 2- or 3-element sequence to a float (3,) array (z defaults to 0)."""
    arr = np.asarray(value, dtype=float)
    if arr.shape == (2,):
        arr = np.array([arr[0], arr[1], 0.0])
    if arr.shape != (3,):
        raise ConfigError(f"expected 2 or 3 vector components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("vector components must be finite")
    return arr


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def unit(v: np.ndarray) -> np.ndarray:
    """Unit vector of v; caller must ensure v is non-degenerate."""
    n = norm(v)
    return v / n


def clamp_norm(v: np.ndarray, limit: float) -> np.ndarray:
    """Rescale v so its magnitude does not exceed limit."""
    n = norm(v)
    if n <= limit or n < 1e-15:
        return v
    return v * (limit / n)


class Mode(enum.Enum):
    """Per-agent evasion state: undisturbed / directly escaping / escaping on report."""

    NORMAL = "normal"
    ACTIVE = "active"
    PASSIVE = "passive"


class ObservationKind(enum.Enum):
    NEIGHBOR = "neighbor"
    INTERFERER = "interferer"


@dataclass
class Observation:
    """One sensed object, expressed relative to the observing agent.

    relative_position is (observed position - observer position), meters.
    estimated_velocity comes from the observer's position-difference filter.
    """

    relative_position: np.ndarray
    estimated_velocity: np.ndarray
    kind: ObservationKind
    source_id: str

    @property
    def distance(self) -> float:
        return norm(self.relative_position)


@dataclass
class AgentState:
    """Kinematic and evasion state of one swarm agent."""

    id: str
    position: np.ndarray = field(default_factory=vec3)
    velocity: np.ndarray = field(default_factory=vec3)
    mode: Mode = Mode.NORMAL
