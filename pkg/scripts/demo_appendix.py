"""Partial sums converge strongly, yet the inverses of the scaling operators blow up.

Prints the n-indexed table and writes it as CSV.

    python scripts/demo_appendix.py --dim 64 --out results/appendix.csv
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import asdict, dataclass
from pathlib import Path

from bvpcont.appendix_demo import DEFAULT_DIMENSION, demo_table, format_table
from bvpcont.cli import fmt


@dataclass
class DemoConfig:
    dim: int = DEFAULT_DIMENSION
    ratio: float = 0.5  # geometric test vector x_k = ratio^(k-1)
    seed: int = 0  # for the random finite-rank operator T
    out: Path | None = None


def run(cfg: DemoConfig):
    rows = demo_table(cfg.dim, cfg.ratio, cfg.seed)
    print(format_table(rows))
    if cfg.out is not None:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        with cfg.out.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(asdict(rows[0])))
            for r in rows:
                writer.writerow([fmt(v) for v in asdict(r).values()])
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=DEFAULT_DIMENSION)
    parser.add_argument("--ratio", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path)
    args = parser.parse_args()
    run(DemoConfig(args.dim, args.ratio, args.seed, args.out))


if __name__ == "__main__":
    main()
