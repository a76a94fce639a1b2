#!/usr/bin/env python3
"""Train the full objective against the stripped baseline over several seeds.

One run directory per (arm, seed) under --out, a trend.csv with the best dev
combined score and the test combined score for every run, and a per-arm mean
summary on stdout. The stripped arm turns off both reconstruction losses and
user-side delexicalization, which is the weakest row of the ablation matrix.

Usage:
    python3 scripts/trend_runs.py --out runs/trend --seeds 0 1 2
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
from pathlib import Path

from bort.cli import main as bort

ARMS: dict[str, list[str]] = {
    "full": [],
    "stripped": [
        "--no-use-br", "--no-use-dr",
        "--lambda1", "0", "--lambda2", "0",
        "--no-use-user-delex",
    ],
}


def run(argv: list[str]) -> None:
    code = bort(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="directory for all runs")
    ap.add_argument("--data", help="existing data directory (default: generate)")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--hidden-size", type=int, default=100)
    ap.add_argument("--embed-size", type=int, default=100)
    ap.add_argument("--batch-size", type=int, default=128)
    ap.add_argument("--max-epochs", type=int, default=60)
    ap.add_argument("--patience", type=int, default=15)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.data:
        data = Path(args.data)
    else:
        data = out / "data"
        run(["gen-data", "--out", str(data)])

    rows = []
    for arm, extra in ARMS.items():
        for seed in args.seeds:
            run_dir = out / f"{arm}-s{seed}"
            run([
                "train", "--data", str(data), "--out", str(run_dir),
                "--hidden-size", str(args.hidden_size),
                "--embed-size", str(args.embed_size),
                "--batch-size", str(args.batch_size),
                "--max-epochs", str(args.max_epochs),
                "--patience", str(args.patience),
                "--seed", str(seed), *extra,
            ])
            summary = json.loads((run_dir / "train.summary.json").read_text())
            report_path = run_dir / "test_report.json"
            run([
                "eval", "--data", str(data),
                "--checkpoint", str(run_dir / "checkpoint.npz"),
                "--split", "test", "--report", str(report_path),
            ])
            report = json.loads(report_path.read_text())
            rows.append({
                "arm": arm,
                "seed": seed,
                "dev_combined": summary["best_dev_combined"],
                "test_combined": report["combined"],
                "epochs_run": summary["epochs_run"],
            })
            print(f"{arm} seed {seed}: dev {rows[-1]['dev_combined']:.2f} "
                  f"test {rows[-1]['test_combined']:.2f}")

    with (out / "trend.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)

    for arm in ARMS:
        dev = [r["dev_combined"] for r in rows if r["arm"] == arm]
        test = [r["test_combined"] for r in rows if r["arm"] == arm]
        print(f"{arm}: mean dev combined {statistics.mean(dev):.2f} "
              f"mean test combined {statistics.mean(test):.2f} over {len(dev)} seeds")


if __name__ == "__main__":
    main()
