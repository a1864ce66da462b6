"""Per-agent evasion state machine and alert messaging.

Each agent owns one ProtocolState. Detection drives the Normal/Active
transitions; received alerts drive Passive. Alerts are flooded with
per-(origin, timestamp) dedup so one detection epoch crosses each directed
link at most once, while fresh epochs (periodic rebroadcasts, re-detections)
propagate again and provide loss tolerance.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .types import Mode, Observation

log = logging.getLogger(__name__)

# How many extra not-present messages the origin re-emits after releasing,
# one per rebroadcast period. Clears are not repeated forever (unlike the
# presence rebroadcast, which lasts as long as the detection), so a small
# burst covers lossy links.
CLEAR_REBROADCAST_COUNT = 5

MAX_ORIGIN_ID_BYTES = 32
_WIRE_HEADER = struct.Struct("<B32sdB")


@dataclass(frozen=True)
class AlertMessage:
    """Wire message: who reported, when, and whether an interferer is present."""

    origin_id: str
    timestamp: float
    interferer_present: bool

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        if len(self.origin_id.encode("utf-8")) > MAX_ORIGIN_ID_BYTES:
            raise ValueError("origin_id exceeds 32 bytes")

    def encode(self) -> bytes:
        """Fixed-layout binary form: id length, padded id, f64 seconds, flag byte."""
        raw = self.origin_id.encode("utf-8")
        return _WIRE_HEADER.pack(
            len(raw), raw.ljust(MAX_ORIGIN_ID_BYTES, b"\0"),
            self.timestamp, 1 if self.interferer_present else 0,
        )

    @classmethod
    def decode(cls, data: bytes) -> "AlertMessage":
        length, raw, timestamp, flag = _WIRE_HEADER.unpack(data)
        return cls(raw[:length].decode("utf-8"), timestamp, bool(flag))

    def log_line(self) -> str:
        return f"t={self.timestamp:g} origin={self.origin_id} present={int(self.interferer_present)}"


@dataclass
class ProtocolState:
    """Evasion-mode state of one agent.

    active_origins maps reporter id to the latest accepted presence timestamp
    (the "stored names"); cleared_epochs remembers the latest not-present
    timestamp per origin so clears are forwarded once and stale presence
    echoes die out.
    """

    own_id: str
    known_ids: frozenset[str]
    d_e1_trigger: float = 8.0
    d_e2_release: float = 11.0
    mode: Mode = Mode.NORMAL
    active_origins: dict[str, float] = field(default_factory=dict)
    cleared_epochs: dict[str, float] = field(default_factory=dict)
    last_own_broadcast: float = float("-inf")
    pending_clear_repeats: int = 0

    def __post_init__(self):
        if not 0 < self.d_e1_trigger <= self.d_e2_release:
            raise ValueError("require 0 < trigger distance <= release distance")

    def _settle_mode_after_release(self) -> None:
        self.mode = Mode.PASSIVE if self.active_origins else Mode.NORMAL


def on_sensor_update(
    state: ProtocolState, interferers: Sequence[Observation], now: float
) -> list[AlertMessage]:
    """Apply one sensing snapshot; returns messages to broadcast.

    Normal/Passive switch to Active when any interferer is observed closer
    than d_e1 (announced with a presence message). Active releases when no
    interferer is observed at all or every observed one is beyond d_e2
    (announced with a not-present message); in between the agent stays
    Active (hysteresis).
    """
    distances = [obs.distance for obs in interferers]
    out: list[AlertMessage] = []
    if state.mode is Mode.ACTIVE:
        if not distances or all(d > state.d_e2_release for d in distances):
            state._settle_mode_after_release()
            out.append(AlertMessage(state.own_id, now, False))
            state.pending_clear_repeats = CLEAR_REBROADCAST_COUNT
            state.last_own_broadcast = now
    elif any(d < state.d_e1_trigger for d in distances):
        state.mode = Mode.ACTIVE
        state.pending_clear_repeats = 0
        out.append(AlertMessage(state.own_id, now, True))
        state.last_own_broadcast = now
    return out


def on_message(
    state: ProtocolState, msg: AlertMessage, now: float
) -> tuple[Optional[AlertMessage], Optional[AlertMessage]]:
    """Handle one received alert; returns (forward, correction).

    forward is the message to rebroadcast unchanged (first acceptance of a
    new (origin, timestamp)); correction is a fresh not-present message the
    agent emits when a stale presence report about itself comes back while
    it is in Normal mode.
    """
    if msg.origin_id not in state.known_ids:
        log.warning("%s dropped alert from unknown origin %r", state.own_id, msg.origin_id)
        return None, None

    if msg.origin_id == state.own_id:
        # Own echoes are never stored or forwarded; a stale presence report
        # about an agent that is back to Normal is answered with a fresh
        # not-present message so the echo dies out everywhere.
        if msg.interferer_present and state.mode is Mode.NORMAL:
            return None, AlertMessage(state.own_id, now, False)
        return None, None

    stored = state.active_origins.get(msg.origin_id, float("-inf"))
    cleared = state.cleared_epochs.get(msg.origin_id, float("-inf"))

    if msg.interferer_present:
        # Accept only strictly newer epochs; ties resolve toward the clear.
        if msg.timestamp > stored and msg.timestamp > cleared:
            state.active_origins[msg.origin_id] = msg.timestamp
            if state.mode is Mode.NORMAL:
                state.mode = Mode.PASSIVE
            return msg, None
        return None, None

    # Not-present: applies only if it is not older than the stored report.
    if msg.timestamp < stored:
        return None, None
    if msg.origin_id in state.active_origins:
        del state.active_origins[msg.origin_id]
        if state.mode is Mode.PASSIVE and not state.active_origins:
            state.mode = Mode.NORMAL
    if msg.timestamp > cleared:
        state.cleared_epochs[msg.origin_id] = msg.timestamp
        return msg, None
    return None, None


def periodic_rebroadcast(
    state: ProtocolState, now: float, period: float = 1.0
) -> Optional[AlertMessage]:
    """Loss-tolerance re-announcements at the minimum messaging rate.

    While Active the agent re-emits its presence report with a fresh
    timestamp once per period; after releasing it re-emits the not-present
    report a bounded number of times.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    if now - state.last_own_broadcast < period:
        return None
    if state.mode is Mode.ACTIVE:
        state.last_own_broadcast = now
        return AlertMessage(state.own_id, now, True)
    if state.pending_clear_repeats > 0:
        state.pending_clear_repeats -= 1
        state.last_own_broadcast = now
        return AlertMessage(state.own_id, now, False)
    return None


def check_mode_invariant(state: ProtocolState, detecting: bool) -> bool:
    """Mode consistency: Active iff detecting; Passive iff stored names remain."""
    if detecting:
        return state.mode is Mode.ACTIVE
    if state.mode is Mode.ACTIVE:
        return False
    expected = Mode.PASSIVE if state.active_origins else Mode.NORMAL
    return state.mode is expected
