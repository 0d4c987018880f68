#!/usr/bin/env python3
"""Run the whole synth -> train -> associate -> evaluate pipeline in one go.

Defaults mirror the full experiment scale (5 vessels, 648 points each,
108 held-out points per vessel, 100 epochs); expect a few minutes of
training. Pass --epochs 5 --points 150 --test-len 25 for a quick look.
"""

import argparse
import sys
from pathlib import Path

from aistrack.cli import main as cli


def run(argv):
    rc = cli([str(a) for a in argv])
    if rc != 0:
        sys.exit(rc)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/demo", help="output directory")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--vessels", type=int, default=5)
    ap.add_argument("--points", type=int, default=648)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--test-len", type=int, default=108)
    ap.add_argument("--crossing", default="", help="'a,b,sample' to force an overlap")
    args = ap.parse_args()

    out = Path(args.out)
    synth = [
        "synth", "--out", out / "data", "--vessels", args.vessels, "--points", args.points,
        "--jitter", 0.2, "--noise", 1e-4, "--seed", args.seed,
    ]
    if args.crossing:
        synth += ["--crossing", args.crossing]
    run(synth)
    run(
        [
            "train", "--data", out / "data" / "fleet.csv", "--out", out / "models",
            "--epochs", args.epochs, "--test-len", args.test_len, "--seed", args.seed,
        ]
    )
    run(
        [
            "associate", "--models", out / "models", "--obs", out / "models" / "holdout.csv",
            "--out", out / "decisions.csv",
        ]
    )
    run(
        [
            "evaluate", "--decisions", out / "decisions.csv",
            "--truth", out / "models" / "holdout_truth.csv", "--out", out / "report.json",
        ]
    )


if __name__ == "__main__":
    main()
