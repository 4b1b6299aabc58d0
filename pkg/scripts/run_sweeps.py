"""Convergence sweeps over the built-in parameter families.

Writes one ``<family>_sweep.csv`` per family (same format as ``bvpcont sweep``)
plus ``summary.csv`` with the verdicts, kappa estimates and condition checks.

    python scripts/run_sweeps.py --out results/sweeps --jobs 4
"""

from __future__ import annotations

import argparse
import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

from bvpcont.catalog import FAMILIES, preset
from bvpcont.cli import _write_csv, fmt, sweep_rows
from bvpcont.config import with_overrides
from bvpcont.limits import convergence_study


@dataclass
class SweepConfig:
    families: tuple = FAMILIES
    out: Path = Path("results/sweeps")
    jobs: int = 1
    grid: int | None = None  # override the family resolution
    tol: float | None = None
    summary_fields: list = field(default_factory=lambda: [
        "family", "verdict", "slope", "kappa1", "kappa2", "condition_0", "condition_I", "condition_II",
        "consistent", "max_err", "min_err", "seconds",
    ])


def run(cfg: SweepConfig) -> list[dict]:
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = []
    for name in cfg.families:
        family = with_overrides(preset(name), tol=cfg.tol, grid=cfg.grid)
        start = time.perf_counter()
        report = convergence_study(family, jobs=cfg.jobs)
        elapsed = time.perf_counter() - start
        _write_csv(sweep_rows(report), str(cfg.out), f"{name}_sweep.csv")
        errs = report.errors
        row = {
            "family": name,
            "verdict": report.verdict,
            "slope": report.slope,
            "kappa1": report.kappa.kappa1 if report.kappa else None,
            "kappa2": report.kappa.kappa2 if report.kappa else None,
            "condition_0": report.conditions["0"].passed,
            "condition_I": report.conditions["I"].passed,
            "condition_II": report.conditions["II"].passed,
            "consistent": report.consistent,
            "max_err": max(errs) if errs else None,
            "min_err": min(errs) if errs else None,
            "seconds": f"{elapsed:.3f}",
        }
        summary.append(row)
        print(f"{name:20s} {report.verdict:15s} consistent={fmt(report.consistent):5s} ({elapsed:.1f} s)")
    with (cfg.out / "summary.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cfg.summary_fields, lineterminator="\n")
        writer.writeheader()
        for row in summary:
            writer.writerow({k: fmt(v) for k, v in row.items()})
    return summary


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=SweepConfig.out)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--grid", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--families", nargs="*", default=list(FAMILIES))
    args = parser.parse_args()
    run(SweepConfig(tuple(args.families), args.out, args.jobs, args.grid, args.tol))


if __name__ == "__main__":
    main()
