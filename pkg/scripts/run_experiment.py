"""Run the full half-plane experiment (Angle and IQP maps) and print the report.

    python3 scripts/run_experiment.py [--workers K] [--order Q]

Outputs land in the directory named by ``configs/experiment.json`` (``out/experiment``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from qfmgeom.cli import main

ROOT = Path(__file__).resolve().parents[1]


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=ROOT / "configs" / "experiment.json")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--order", type=int, default=None)
    return parser.parse_args(argv)


if __name__ == "__main__":
    args = parse_args()
    flags = ["--workers", str(args.workers)]
    if args.order is not None:
        flags += ["--order", str(args.order)]
    status = main(["run", str(args.config), *flags])
    out = (args.config.parent / json.loads(args.config.read_text())["out"]).resolve()
    report = out / "report.txt"
    if report.exists():
        print()
        print(report.read_text(), end="")
    sys.exit(status)
