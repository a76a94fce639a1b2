#!/usr/bin/env python3
"""Sweep state-corruption rates over trained runs and aggregate per arm.

Takes a directory produced by trend_runs.py (one subdirectory per run, named
<arm>-s<seed>, each holding checkpoint.npz + vocab.json) and evaluates every
checkpoint in the policy-optimization setting while the serialized oracle
state is masked at increasing proportions. Seeds within an arm are averaged.

Usage:
    python3 scripts/noise_robustness.py --runs runs/trend --out runs/trend/robustness
"""

from __future__ import annotations

import argparse
import csv
import statistics
from collections import defaultdict
from pathlib import Path

from bort.cli import main as bort
from bort.metrics import DEFAULT_PROPORTIONS


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", required=True, help="directory of <arm>-s<seed> runs")
    ap.add_argument("--data", help="data directory (default: <runs>/data)")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--split", default="test")
    ap.add_argument("--seed", type=int, default=0, help="rollout noise seed")
    args = ap.parse_args()

    runs = Path(args.runs)
    data = Path(args.data) if args.data else runs / "data"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model_flags = []
    labels = []
    for ckpt in sorted(runs.glob("*-s*/checkpoint.npz")):
        label = ckpt.parent.name
        labels.append(label)
        model_flags += ["--model", f"{label}={ckpt}"]
    if not labels:
        raise SystemExit(f"no <arm>-s<seed>/checkpoint.npz under {runs}")

    sweep_csv = out / "sweep_runs.csv"
    code = bort([
        "noise-sweep", "--data", str(data), "--split", args.split,
        "--seed", str(args.seed), "--out", str(sweep_csv), *model_flags,
    ])
    if code != 0:
        raise SystemExit(code)

    # collapse <arm>-s<seed> rows into per-arm means at each proportion
    per_arm: dict[tuple[str, float], list[float]] = defaultdict(list)
    with sweep_csv.open() as fh:
        for row in csv.DictReader(fh):
            arm = row["model"].rsplit("-s", 1)[0]
            per_arm[(arm, float(row["p"]))].append(float(row["combined"]))

    arms = sorted({arm for arm, _ in per_arm})
    with (out / "robustness.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm", "p", "mean_combined", "n_seeds"])
        for arm in arms:
            for p in DEFAULT_PROPORTIONS:
                vals = per_arm[(arm, p)]
                writer.writerow([arm, f"{p:g}", statistics.mean(vals), len(vals)])

    for arm in arms:
        line = "  ".join(
            f"p={p:g}:{statistics.mean(per_arm[(arm, p)]):6.2f}"
            for p in DEFAULT_PROPORTIONS
        )
        print(f"{arm:>10}  {line}")


if __name__ == "__main__":
    main()
