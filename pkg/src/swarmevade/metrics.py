"""Run recording, distance statistics, event-time extraction, CSV export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from .types import Mode


@dataclass(frozen=True)
class StepRow:
    """World snapshot at one step boundary."""

    time: float
    agent_ids: tuple[str, ...]
    positions: np.ndarray          # (n_agents, 3)
    modes: tuple[Mode, ...]
    interferer_ids: tuple[str, ...]
    interferer_positions: np.ndarray  # (n_interferers, 3)


@dataclass(frozen=True)
class Event:
    """A logged simulation event (detection, mode change, ...)."""

    time: float
    kind: str
    agent_id: str


@dataclass
class RunRecord:
    """Per-step snapshots plus the event log of one simulation run."""

    rows: list[StepRow] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)

    def add_row(self, row: StepRow) -> None:
        if self.rows and row.time <= self.rows[-1].time:
            raise ValueError("row times must be strictly increasing")
        self.rows.append(row)

    def log_event(self, time: float, kind: str, agent_id: str) -> None:
        self.events.append(Event(time, kind, agent_id))

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.rows])


@dataclass(frozen=True)
class DistanceStats:
    """Per-step min/mean/max over all unordered pairs."""

    min: np.ndarray
    mean: np.ndarray
    max: np.ndarray


def _pairwise(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    iu = np.triu_indices(len(positions), k=1)
    return dist[iu]


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff ** 2).sum(-1)).ravel()


def distance_stats(record: RunRecord) -> tuple[DistanceStats, Optional[DistanceStats]]:
    """(agent-agent stats, agent-interferer stats or None when absent)."""
    if not record.rows or len(record.rows[0].agent_ids) < 2:
        raise ValueError("distance statistics need at least 2 agents")
    aa_min, aa_mean, aa_max = [], [], []
    ai_min, ai_mean, ai_max = [], [], []
    any_interferer = False
    for row in record.rows:
        pairs = _pairwise(row.positions)
        aa_min.append(pairs.min())
        aa_mean.append(pairs.mean())
        aa_max.append(pairs.max())
        if len(row.interferer_ids) > 0:
            any_interferer = True
            cross = _cross(row.positions, row.interferer_positions)
            ai_min.append(cross.min())
            ai_mean.append(cross.mean())
            ai_max.append(cross.max())
        else:
            ai_min.append(math.nan)
            ai_mean.append(math.nan)
            ai_max.append(math.nan)
    agent_stats = DistanceStats(np.array(aa_min), np.array(aa_mean), np.array(aa_max))
    if not any_interferer:
        return agent_stats, None
    return agent_stats, DistanceStats(np.array(ai_min), np.array(ai_mean), np.array(ai_max))


def nearest_neighbor_stats(positions: np.ndarray) -> tuple[float, float, float]:
    """(mean, min, max) of each agent's nearest-neighbor distance."""
    if len(positions) < 2:
        raise ValueError("need at least 2 agents")
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    nearest = dist.min(axis=1)
    return float(nearest.mean()), float(nearest.min()), float(nearest.max())


@dataclass(frozen=True)
class EventTimes:
    """The run's reaction-timing quantities (None where never reached)."""

    t_s: Optional[float]
    t_d: Optional[float]
    t_e: Optional[float]

    @property
    def t_ed(self) -> Optional[float]:
        if self.t_e is None or self.t_d is None:
            return None
        return self.t_e - self.t_d

    @property
    def t_ds(self) -> Optional[float]:
        if self.t_d is None or self.t_s is None:
            return None
        return self.t_d - self.t_s


def extract_event_times(record: RunRecord, d_e1: float) -> EventTimes:
    """Unsafe-distance crossing, first logged detection, all-agents-escaping.

    t_s comes from row geometry (center-to-center distance below d_e1);
    t_d from the sensing module's logged detection events, so range/FOV/
    probability gaps show up as t_d > t_s; t_e from logged mode changes
    (the time the last agent left Normal while all others were escaping).
    """
    t_s = None
    for row in record.rows:
        if len(row.interferer_ids) == 0:
            continue
        if _cross(row.positions, row.interferer_positions).min() < d_e1:
            t_s = row.time
            break

    t_d = None
    for ev in record.events:
        if ev.kind == "detection":
            t_d = ev.time
            break

    t_e = None
    if record.rows:
        agent_ids = record.rows[0].agent_ids
        escaping: set[str] = set()
        for ev in sorted(record.events, key=lambda e: e.time):
            if ev.kind in ("mode_active", "mode_passive"):
                escaping.add(ev.agent_id)
            elif ev.kind == "mode_normal":
                escaping.discard(ev.agent_id)
            if len(escaping) == len(agent_ids):
                t_e = ev.time
                break
    return EventTimes(t_s, t_d, t_e)


def _fmt(x: float) -> str:
    return format(x, ".9g")


CSV_HEADER = (
    "time,agent_id,x,y,z,mode,min_dist_agents,mean_dist_agents,"
    "min_dist_intruder,mean_dist_intruder"
)


def export_csv(record: RunRecord, stream: TextIO) -> None:
    """One row per (step, agent); per-step distance stats repeated per row.

    Deterministic field order and 9-significant-digit floats make re-exports
    byte-identical. Stats that are undefined (single agent, no interferer)
    are left empty.
    """
    stream.write(CSV_HEADER + "\n")
    for row in record.rows:
        n = len(row.agent_ids)
        if n >= 2:
            pairs = _pairwise(row.positions)
            aa = (_fmt(pairs.min()), _fmt(pairs.mean()))
        else:
            aa = ("", "")
        if n >= 1 and len(row.interferer_ids) > 0:
            cross = _cross(row.positions, row.interferer_positions)
            ai = (_fmt(cross.min()), _fmt(cross.mean()))
        else:
            ai = ("", "")
        for i, agent_id in enumerate(row.agent_ids):
            p = row.positions[i]
            stream.write(
                f"{_fmt(row.time)},{agent_id},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])},"
                f"{row.modes[i].value},{aa[0]},{aa[1]},{ai[0]},{ai[1]}\n"
            )


def export_csv_path(record: RunRecord, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        export_csv(record, fh)


def parse_csv(stream: TextIO) -> dict[str, list]:
    """Read back an exported CSV into per-column lists (floats where numeric)."""
    header = stream.readline().strip().split(",")
    columns: dict[str, list] = {name: [] for name in header}
    for line in stream:
        line = line.rstrip("\n")
        if not line:
            continue
        for name, value in zip(header, line.split(",")):
            if name in ("agent_id", "mode"):
                columns[name].append(value)
            else:
                columns[name].append(float(value) if value else math.nan)
    return columns


def summary_dict(record: RunRecord, d_e1: float) -> dict:
    """The run summary exported as summary.json."""
    times = extract_event_times(record, d_e1)
    agent_stats, intruder_stats = (None, None)
    if record.rows and len(record.rows[0].agent_ids) >= 2:
        agent_stats, intruder_stats = distance_stats(record)
    return {
        "t_s": times.t_s,
        "t_d": times.t_d,
        "t_e": times.t_e,
        "t_ed": times.t_ed,
        "t_ds": times.t_ds,
        "min_interagent_overall": (
            float(np.min(agent_stats.min)) if agent_stats is not None else None
        ),
        "min_intruder_overall": (
            float(np.nanmin(intruder_stats.min)) if intruder_stats is not None else None
        ),
    }


def write_summary(record: RunRecord, d_e1: float, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary_dict(record, d_e1), fh, indent=2)
        fh.write("\n")
