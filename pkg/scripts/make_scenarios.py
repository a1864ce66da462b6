#!/usr/bin/env python3
"""Regenerate the shipped scenario files from the experiment builders."""

import json
from pathlib import Path

from swarmevade.experiments import (
    chase_scenario,
    equilibrium_spacing,
    fov_ratio_scenario,
    triangle_positions,
)
from swarmevade.params import SwarmParams
from swarmevade.scenario import scenario_to_dict

OUT = Path(__file__).resolve().parent.parent / "scenarios"


def live_scenario_dict() -> dict:
    params = SwarmParams().replace(k1s=2.6)
    spacing = equilibrium_spacing(params)
    doc = scenario_to_dict(chase_scenario(params=params, duration_s=600.0, stop_at_s=None))
    doc["agents"] = [
        {"id": f"uav{i}", "position": [float(p[0]), float(p[1])]}
        for i, p in enumerate(triangle_positions(spacing))
    ]
    doc["interferers"] = [
        {"id": "intruder", "position": [15.0, 0.0], "policy": {"kind": "external"}}
    ]
    return doc


def main() -> None:
    OUT.mkdir(exist_ok=True)
    files = {
        "chase.json": scenario_to_dict(chase_scenario(evasion=True)),
        "fov_ratio.json": scenario_to_dict(fov_ratio_scenario(evasion=True)),
        "live.json": live_scenario_dict(),
    }
    for name, doc in files.items():
        path = OUT / name
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
