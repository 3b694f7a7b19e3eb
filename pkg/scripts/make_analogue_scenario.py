#!/usr/bin/env python3
"""Write the bundled benchmark scenarios into scenarios/.

The landscape is generated deterministically by the library; this script just
serializes it with the standard experiment constants so the CLI can run it.
"""

import json
from pathlib import Path

from spreadcontrol.scenario import landscape_to_json
from spreadcontrol.wildfire import analogue_landscape

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "scenarios"


def analogue_scenario(solve: dict | None) -> dict:
    doc = {
        "meta": {"name": "wildfire-analogue", "seed": 0},
        "landscape": landscape_to_json(analogue_landscape()),
        "params": {
            "r": 3.5,
            "delta": 0.2,
            "beta_lo": 1e-4,
            "weights": 1.0,
            "costs": {"city": 1.0, "other": 0.01},
        },
    }
    if solve is not None:
        doc["solve"] = solve
    return doc


def two_node_scenario() -> dict:
    return {
        "meta": {"name": "two-node", "seed": 0},
        "network": {
            "nodes": [
                {"delta": 0.2, "cost": 1.0, "likelihood": 0.5},
                {"delta": 0.2, "cost": 0.0, "likelihood": 1.0},
            ],
            "edges": [
                {"i": 0, "j": 1, "beta": 0.5, "beta_lo": 0.05, "beta_hi": 0.5}
            ],
        },
        "params": {"r": 3.5},
        "solve": {"problem": 1, "model": "log", "budget": 1.0},
    }


def main() -> None:
    OUT.mkdir(exist_ok=True)
    files = {
        "wildfire_analogue.json": analogue_scenario(
            {"problem": 1, "model": "log", "budget": 25.0}
        ),
        "two_node.json": two_node_scenario(),
    }
    for name, doc in files.items():
        path = OUT / name
        path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
