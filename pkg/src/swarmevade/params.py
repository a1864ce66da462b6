"""Control-law parameters for the swarm force model and its evasion extension.

All force profiles are dimensionless; distances are meters, speeds m/s.
The shipped defaults are tuned so that a 50-agent swarm settles into a
lattice with nearest-neighbor spacing near 2.89 m (see the ``calibrate``
CLI command, which verifies this).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .types import ParameterError

# Fixed by construction: only the product of the position/acceleration
# conversion gains enters the desired-position update, and virtual mass
# is unity so forces are accelerations.
K_PA = 1.0
VIRTUAL_MASS = 1.0


@dataclass(frozen=True)
class SwarmParams:
    """Every scalar of the cohesion/separation/alignment/evasion control law.

    Attributes:
        l: safety radius around an agent (m); profile distances are measured
            outside this radius.
        l_min: floor of clamped profile distances (m).
        d_min: cohesion onset distance (m).
        d_c: cohesion quadratic-to-log switch distance (m).
        k1c, k2c, k3c: cohesion gains (m^-2, dimensionless, m^-1).
        d_s: separation steep-to-quadratic switch distance (m).
        d_max: separation cutoff distance (m).
        k1s, k2s: separation gains (m^-2, m^1/2).
        k_a: alignment gain (s/m).
        d_e1: evasion trigger distance (m).
        d_e2: escape-force cutoff and evasion release distance (m).
        k_e: escape gain (m^1/2).
        k_f, k_v, d_f: following-force gains (-, s/m, -); d_f >= 1 keeps the
            following weight non-negative.
        passive_gain_scale: multiplier applied to cohesion/separation gains
            while in passive mode.
        r_b: outer neighbor interaction radius (m); per-force cutoffs apply
            inside it.
        v_max: swarm speed clamp (m/s).
        a_max: acceleration clamp (m/s^2).
        tracking_gain: fraction of the one-step commanded velocity realized
            by the point-mass position tracker; values below 1 make the
            tracker dissipative, standing in for drag and closed-loop
            position tracking of a real vehicle.
    """

    l: float = 0.6
    l_min: float = 0.1
    d_min: float = 0.2
    d_c: float = 2.0
    k1c: float = 0.3
    k2c: float = 0.3
    k3c: float = 1.0
    d_s: float = 1.0
    d_max: float = 3.0
    k1s: float = 1.6
    k2s: float = 6.0
    k_a: float = 0.5
    d_e1: float = 8.0
    d_e2: float = 11.0
    k_e: float = 16.0
    k_f: float = 1.0
    k_v: float = 1.0
    d_f: float = 1.0
    passive_gain_scale: float = 1.5
    r_b: float = 4.0
    v_max: float = 2.0
    a_max: float = 2.0
    tracking_gain: float = 0.9

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.l_min > 0:
            raise ParameterError("l_min must be positive")
        if self.l < 0:
            raise ParameterError("l must be non-negative")
        if not 0 <= self.d_min < self.d_c:
            raise ParameterError("require 0 <= d_min < d_c")
        if not 0 < self.d_s < self.d_max:
            raise ParameterError("require 0 < d_s < d_max")
        if not 0 < self.d_e1 <= self.d_e2:
            raise ParameterError("require 0 < d_e1 <= d_e2")
        gains = {
            "k1c": self.k1c, "k2c": self.k2c, "k3c": self.k3c,
            "k1s": self.k1s, "k2s": self.k2s, "k_a": self.k_a,
            "k_e": self.k_e, "k_f": self.k_f, "k_v": self.k_v,
            "passive_gain_scale": self.passive_gain_scale,
        }
        for name, value in gains.items():
            if value < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.d_f < 1:
            raise ParameterError("d_f must be >= 1 (keeps the following weight >= 0)")
        if not self.v_max > 0:
            raise ParameterError("v_max must be positive")
        if not self.a_max > 0:
            raise ParameterError("a_max must be positive")
        if not self.r_b > 0:
            raise ParameterError("r_b must be positive")
        if not 0 < self.tracking_gain <= 1:
            raise ParameterError("tracking_gain must be in (0, 1]")

    def scaled_for_passive(self) -> "SwarmParams":
        """Cohesion/separation gains scaled up for the faster passive-mode reaction."""
        s = self.passive_gain_scale
        return dataclasses.replace(
            self, k1c=self.k1c * s, k2c=self.k2c * s,
            k1s=self.k1s * s, k2s=self.k2s * s,
        )

    def replace(self, **overrides) -> "SwarmParams":
        try:
            return dataclasses.replace(self, **overrides)
        except TypeError as exc:
            raise ParameterError(str(exc)) from None


DEFAULT_PARAMS = SwarmParams()
