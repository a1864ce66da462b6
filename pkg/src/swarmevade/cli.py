"""Command-line entry points: run scenarios, shock study, calibration, live server.

Exit codes: 0 success / criterion pass, 1 criterion fail, 2 usage or
configuration error. The SWARM_EVADE_SEED environment variable overrides the
default seed when neither a flag nor the scenario file sets one.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import metrics
from .engine import run_scenario
from .experiments import run_shock_study, settled_lattice_positions
from .params import SwarmParams
from .scenario import load_scenario
from .svgchart import line_chart
from .types import ConfigError, ParameterError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _env_seed() -> int | None:
    raw = os.environ.get("SWARM_EVADE_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SWARM_EVADE_SEED must be an integer, got {raw!r}") from None


def _resolve_seed(flag_seed, file_seed: int) -> int:
    if flag_seed is not None:
        return flag_seed
    env = _env_seed()
    if env is not None and file_seed == 0:
        return env
    return file_seed


def cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    config = config.replace(seed=_resolve_seed(args.seed, config.seed))
    if args.no_evasion:
        config = config.replace(evasion_enabled=False)
    if args.enlarged_range:
        # Stronger baseline reaction: doubled interferer sensing plus
        # doubled separation gains, as used for the comparison study.
        config = config.replace(
            sensing=dataclasses.replace(
                config.sensing,
                interferer_range=2 * config.sensing.interferer_range,
            ),
            params=config.params.replace(
                k1s=2 * config.params.k1s, k2s=2 * config.params.k2s,
            ),
        )

    world = run_scenario(config)
    record = world.record

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics.export_csv_path(record, out / "record.csv")
    metrics.write_summary(record, config.params.d_e1, out / "summary.json")

    times = record.times.tolist()
    agent_stats, intruder_stats = (None, None)
    series: dict[str, list] = {}
    if len(config.agents) >= 2:
        agent_stats, intruder_stats = metrics.distance_stats(record)
        series["min agent-agent"] = agent_stats.min.tolist()
        series["mean agent-agent"] = agent_stats.mean.tolist()
    if intruder_stats is not None:
        series["min agent-intruder"] = intruder_stats.min.tolist()
        series["mean agent-intruder"] = intruder_stats.mean.tolist()
    svg = line_chart(times, series, title="Distances", x_label="time [s]",
                     y_label="distance [m]")
    (out / "distances.svg").write_text(svg, encoding="utf-8")

    summary = metrics.summary_dict(record, config.params.d_e1)
    pretty = {k: ("X" if v is None else round(v, 3)) for k, v in summary.items()}
    print(f"wrote {out}/record.csv, summary.json, distances.svg")
    print(" ".join(f"{k}={v}" for k, v in pretty.items()))
    return EXIT_OK


def cmd_shock(args) -> int:
    params = SwarmParams()
    positions = settled_lattice_positions(
        n_agents=args.agents, seed=_resolve_seed(args.seed, 0), params=params,
    )
    result = run_shock_study(positions, params=params, comm_range=args.comm_range)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spread.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "count_normal", "count_active", "count_passive"])
        writer.writerows(result.spread_rows)
    lattice = {
        "mean_spacing": result.lattice_mean,
        "min_spacing": result.lattice_min,
        "max_spacing": result.lattice_max,
        "detector": result.detector_id,
        "eccentricity": result.eccentricity,
        "awareness_steps": result.awareness_steps,
        "clear_steps": result.clear_steps,
    }
    with open(out / "lattice.json", "w", encoding="utf-8") as fh:
        json.dump(lattice, fh, indent=2)
        fh.write("\n")
    print(
        f"lattice mean={result.lattice_mean:.3f} min={result.lattice_min:.3f} "
        f"max={result.lattice_max:.3f}"
    )
    print(
        f"detector={result.detector_id} eccentricity={result.eccentricity} "
        f"awareness_steps={result.awareness_steps} clear_steps={result.clear_steps}"
    )
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.band <= 0:
        print("calibrate: band must be positive", file=sys.stderr)
        return EXIT_CONFIG
    params = SwarmParams()
    positions = settled_lattice_positions(seed=_resolve_seed(args.seed, 0), params=params)
    mean, mn, mx = metrics.nearest_neighbor_stats(positions)
    ok_mean = abs(mean - args.target_mean) <= args.band
    ok_min = mn >= args.min_floor
    ok_max = mx <= args.max_ceiling
    print(f"nearest-neighbor spacing: mean={mean:.3f} min={mn:.3f} max={mx:.3f}")
    print(
        f"mean within {args.target_mean}+/-{args.band}: {'PASS' if ok_mean else 'FAIL'}; "
        f"min >= {args.min_floor}: {'PASS' if ok_min else 'FAIL'}; "
        f"max <= {args.max_ceiling}: {'PASS' if ok_max else 'FAIL'}"
    )
    return EXIT_OK if (ok_mean and ok_min and ok_max) else EXIT_FAIL


def cmd_serve(args) -> int:
    from .live import serve  # deferred: pulls in fastapi/uvicorn
    from .scenario import parse_scenario

    with open(args.scenario, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    config = parse_scenario(raw)
    config = config.replace(seed=_resolve_seed(args.seed, config.seed))
    serve(config, host=args.host, port=args.port, step_delay=args.step_delay,
          raw_scenario=raw)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmevade",
        description="Deterministic UAV-swarm simulator with collective evasion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file, write record/summary/chart")
    p_run.add_argument("scenario", help="scenario JSON path")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_run.add_argument("--no-evasion", action="store_true",
                       help="disable evasion (interferer handled by separation only)")
    p_run.add_argument("--enlarged-range", action="store_true",
                       help="double interferer sensing range and separation gains")
    p_run.set_defaults(func=cmd_run)

    p_shock = sub.add_parser("shock", help="frozen-lattice alert propagation study")
    p_shock.add_argument("--agents", type=int, default=50)
    p_shock.add_argument("--comm-range", type=float, default=5.0)
    p_shock.add_argument("--out", default="out-shock")
    p_shock.add_argument("--seed", type=int, default=None)
    p_shock.set_defaults(func=cmd_shock)

    p_cal = sub.add_parser("calibrate", help="check default gains against lattice spacing band")
    p_cal.add_argument("--target-mean", type=float, default=2.89)
    p_cal.add_argument("--band", type=float, default=0.25)
    p_cal.add_argument("--min-floor", type=float, default=2.3)
    p_cal.add_argument("--max-ceiling", type=float, default=3.7)
    p_cal.add_argument("--seed", type=int, default=None)
    p_cal.set_defaults(func=cmd_calibrate)

    p_serve = sub.add_parser("serve", help="serve a scenario live over WebSocket")
    p_serve.add_argument("--scenario", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--step-delay", type=float, default=None,
                         help="wall seconds per step (default: dt, i.e. real time)")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
