#!/usr/bin/env python3
"""Generate a small MER-shaped CSV for trying the CLI offline.

Two synthetic monthly series (a trending one and a change-like one
centered on zero) in the exact column layout the ingest module expects,
including annual (month 13) summary rows and a not-available marker so
the file exercises the same parsing paths as the real download.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

PATTERN = np.array([0, 35, -20, 50, -45, 10, 60, -55, 25, -30, 45, -75], dtype=float)


def monthly(n: int, level: float, scale: float, rng: np.random.Generator) -> np.ndarray:
    drift = level + np.cumsum(rng.normal(0.0, scale / 25.0, n))
    return drift + np.tile(PATTERN, n // 12 + 1)[:n] * scale / 60.0 + rng.normal(0.0, scale / 30.0, n)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path("demo_mer.csv"))
    parser.add_argument("--years", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    n = 12 * args.years
    series = {
        "DEMOAPUS": ("Demo Alpha Product Supplied", "Thousand Barrels per Day", monthly(n, 3200.0, 420.0, rng)),
        "DEMOBPUS": ("Demo Beta Product Supplied", "Thousand Barrels per Day", monthly(n, 1100.0, 140.0, rng)),
    }

    with args.out.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["MSN", "YYYYMM", "Value", "Description", "Unit"])
        for msn, (desc, unit, values) in series.items():
            year, month = 2003, 1
            for value in values:
                writer.writerow([msn, f"{year}{month:02d}", f"{value:.3f}", desc, unit])
                month += 1
                if month == 13:
                    writer.writerow([msn, f"{year}13", "Not Available", desc, unit])
                    year, month = year + 1, 1

    print(f"wrote {args.out} ({n} months x {len(series)} series)")
    print(f"try: mercast list --input {args.out}")
    print(f"     mercast forecast --input {args.out} --msn DEMOAPUS --model arima --out demo_out")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
