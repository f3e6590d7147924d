#!/usr/bin/env python3
"""Run the full pipeline against a scripted offline provider.

Generates a small math dataset, sweeps a three-strategy reflection grid,
and renders every report kind. Doubles as a wiring template: swap the
provider block for an http entry and point the dataset at real files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from reflectbench.cli import main as cli_main


def build_workspace(root: Path, n_samples: int, seed: int) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "math.jsonl", "w", encoding="utf-8") as fh:
        for i in range(n_samples):
            row = {
                "problem": f"problem {i}: what is {i} plus {i + 1}?",
                "answer": str(2 * i + 1),
            }
            fh.write(json.dumps(row) + "\n")

    # every third problem starts wrong and is fixed on the first
    # reflection, so the gains and transitions reports carry signal
    rules = []
    for i in range(n_samples):
        right = f"<answer>{2 * i + 1}</answer>"
        wrong = f"<answer>{2 * i}</answer>"
        responses = [wrong, right] if i % 3 == 0 else [right]
        rules.append({"contains": f"problem {i}:", "responses": responses})
    pricing = {
        "as_of": "2025-04-16",
        "models": {
            "mock-m": {"input_per_1k": "0.003", "output_per_1k": "0.015"},
        },
    }
    (root / "pricing.json").write_text(json.dumps(pricing, indent=2), encoding="utf-8")

    config = {
        "dataset": {"task": "math_reasoning", "path": "math.jsonl"},
        "strategies": [
            {"model_id": "mock-m"},
            {"model_id": "mock-m", "reflection_rounds": 1},
            {"model_id": "mock-m", "reflection_rounds": 3},
        ],
        "providers": {
            "models": {
                "mock-m": {
                    "kind": "mock",
                    "script": {"rules": rules, "default": "<answer>unknown</answer>"},
                }
            }
        },
        "pricing": "pricing.json",
        "output_dir": "out",
        "seed": seed,
    }
    config_path = root / "run.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return config_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="mock_benchmark", help="workspace directory")
    parser.add_argument("--samples", type=int, default=40, help="dataset size")
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args(argv)

    root = Path(args.out)
    config = build_workspace(root, args.samples, args.seed)
    rc = cli_main(["run", "--config", str(config)])
    if rc != 0:
        return rc

    traces = root / "out" / "traces.jsonl"
    for kind in ("frontier", "gains", "transitions", "significance", "costs"):
        cmd = ["report", "--traces", str(traces), "--kind", kind]
        if kind == "costs":
            cmd += ["--pricing", str(root / "pricing.json")]
        rc = cli_main(cmd)
        if rc != 0:
            return rc
    print(f"workspace: {root.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
