"""Range-limited lossy broadcast network.

The neighbor graph is rebuilt from agent positions every step; broadcasts
fan out one in-flight copy per neighbor, each independently dropped with the
configured probability, and survivors are delivered a fixed number of steps
later. Everything is deterministic under the seeded generator (PCG64) and
the (deliver step, sender, receiver) delivery ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .protocol import AlertMessage
from .types import ParameterError


@dataclass(frozen=True)
class NetConfig:
    comm_range: float = 5.0
    hop_latency: int = 1
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.comm_range > 0:
            raise ParameterError("comm_range must be positive")
        if self.hop_latency < 1:
            raise ParameterError("hop_latency must be >= 1")
        if not 0 <= self.drop_probability < 1:
            raise ParameterError("drop_probability must be in [0, 1)")


@dataclass(frozen=True)
class InFlightMessage:
    payload: AlertMessage
    sender_id: str
    receiver_id: str
    deliver_at_step: int


def build_graph(positions: Mapping[str, np.ndarray], cfg: NetConfig) -> dict[str, list[str]]:
    """Undirected adjacency: edge iff separation <= comm_range (inclusive)."""
    ids = sorted(positions)
    adjacency: dict[str, list[str]] = {i: [] for i in ids}
    for idx, a in enumerate(ids):
        for b in ids[idx + 1:]:
            if float(np.linalg.norm(positions[a] - positions[b])) <= cfg.comm_range:
                adjacency[a].append(b)
                adjacency[b].append(a)
    return adjacency


def broadcast(
    from_id: str,
    msg: AlertMessage,
    graph: Mapping[str, list[str]],
    cfg: NetConfig,
    current_step: int,
    rng: np.random.Generator,
) -> list[InFlightMessage]:
    """One copy per current neighbor, minus independent Bernoulli drops."""
    if from_id not in graph:
        raise KeyError(f"unknown sender {from_id!r}")
    out = []
    for receiver in sorted(graph[from_id]):
        if cfg.drop_probability > 0 and rng.random() < cfg.drop_probability:
            continue
        out.append(InFlightMessage(msg, from_id, receiver, current_step + cfg.hop_latency))
    return out


def deliver_due(
    queue: list[InFlightMessage], current_step: int
) -> tuple[list[InFlightMessage], list[InFlightMessage]]:
    """Split the queue into (due now, still in flight), due sorted for determinism."""
    due = [m for m in queue if m.deliver_at_step <= current_step]
    remaining = [m for m in queue if m.deliver_at_step > current_step]
    due.sort(key=lambda m: (m.deliver_at_step, m.sender_id, m.receiver_id))
    return due, remaining


@dataclass
class Network:
    """A config plus its in-flight queue and drop-decision RNG stream."""

    cfg: NetConfig
    queue: list[InFlightMessage] = field(default_factory=list)
    rng: np.random.Generator = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.Generator(np.random.PCG64(self.cfg.seed))

    def send(self, from_id: str, msg: AlertMessage, graph, current_step: int) -> int:
        sent = broadcast(from_id, msg, graph, self.cfg, current_step, self.rng)
        self.queue.extend(sent)
        return len(sent)

    def collect_due(self, current_step: int) -> list[InFlightMessage]:
        due, self.queue = deliver_due(self.queue, current_step)
        return due
