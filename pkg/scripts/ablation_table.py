#!/usr/bin/env python3
"""Run the five-variant objective ablation and print the comparison table.

Thin wrapper over `bort ablate` that also generates a corpus when none is
given, so a single command reproduces the whole matrix from scratch.

Usage:
    python3 scripts/ablation_table.py --out runs/ablation
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from bort.cli import main as bort


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--data", help="existing data directory (default: generate)")
    ap.add_argument("--hidden-size", type=int, default=100)
    ap.add_argument("--embed-size", type=int, default=100)
    ap.add_argument("--batch-size", type=int, default=128)
    ap.add_argument("--max-epochs", type=int, default=60)
    ap.add_argument("--patience", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.data:
        data = Path(args.data)
    else:
        data = out / "data"
        code = bort(["gen-data", "--out", str(data)])
        if code != 0:
            raise SystemExit(code)

    code = bort([
        "ablate", "--data", str(data), "--out", str(out),
        "--hidden-size", str(args.hidden_size),
        "--embed-size", str(args.embed_size),
        "--batch-size", str(args.batch_size),
        "--max-epochs", str(args.max_epochs),
        "--patience", str(args.patience),
        "--seed", str(args.seed),
    ])
    if code != 0:
        raise SystemExit(code)

    rows = json.loads((out / "ablation.json").read_text())
    width = max(len(r["variant"]) for r in rows)
    print(f"{'variant':<{width}}  dev_combined  test_combined")
    for r in rows:
        print(f"{r['variant']:<{width}}  {r['dev_combined']:12.2f}  "
              f"{r['test_combined']:13.2f}")


if __name__ == "__main__":
    main()
