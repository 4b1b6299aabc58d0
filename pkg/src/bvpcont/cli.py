"""Command line entry point.

Exit status: 0 on success, 1 on configuration or usage errors, 2 when the
problem (at eps = 0 for sweeps) is degenerate.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import appendix_demo
from .catalog import CATALOG, preset_config
from .config import ConfigError, family_from_dict, load_config, with_overrides
from .limits import ProblemFamily, check_conditions, convergence_study
from .solver import DegenerateProblem, factorize

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(rows, out_dir: str | None, filename: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out_dir is None:
        sys.stdout.write(text)
    else:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text)
    return text


def _family(args) -> ProblemFamily:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("exactly one of --config and --preset is required")
    cfg = load_config(args.config) if args.config else preset_config(args.preset)
    family = family_from_dict(cfg)
    if args.out is None and isinstance(cfg.get("output"), dict) and "dir" in cfg["output"]:
        args.out = cfg["output"]["dir"]
    return with_overrides(family, tol=args.tol, grid=args.grid)


def solution_rows(family: ProblemFamily, z) -> list:
    top = family.n + family.r
    header = ["t"]
    for c in range(family.m):
        prefix = "z" if family.m == 1 else f"z{c + 1}"
        header += [f"{prefix}_d{j}" for j in range(top + 1)]
    rows = [header]
    vals = z.values  # (G, top + 1, m)
    for i, t in enumerate(z.grid):
        rows.append([t] + [vals[i, j, c] for c in range(family.m) for j in range(top + 1)])
    return rows


def cmd_solve(args) -> int:
    family = _family(args)
    eps = float(args.eps)
    grid = family.master_grid((eps,))
    fac = factorize(family.system(eps), family.boundary_at(eps), grid, family.tol)
    try:
        out = fac.solve(family.q_at(eps))
    except DegenerateProblem as err:
        print(f"degenerate problem: sigma_min = {err.sigma_min:.3e} (threshold {err.threshold:.3e})", file=sys.stderr)
        return EXIT_DEGENERATE
    _write_csv(solution_rows(family, out.solution), args.out, f"{family.name}_solve.csv")
    print(f"ode_residual={out.ode_residual:.3e} boundary_residual={out.boundary_residual:.3e} "
          f"sigma_min={out.sigma_min:.6e} grid={out.resolution} tol={out.tol:g}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    family = _family(args)
    verdicts = check_conditions(family)
    rows = [["condition", "passed", "witness"]] + [list(r) for r in verdicts.rows()]
    if verdicts.a1_consistent is not None:
        rows.append(["d1-d5 implies II", verdicts.a1_consistent, ""])
    if args.out is None:
        for name, passed, witness in verdicts.rows():
            print(f"{name:10s} {'true ' if passed else 'false'} {witness:.6e}")
    else:
        _write_csv(rows, args.out, f"{family.name}_check.csv")
        print(f"wrote {Path(args.out) / (family.name + '_check.csv')}", file=sys.stderr)
    return EXIT_OK


def sweep_rows(report) -> list:
    rows = [["eps", "err", "d_n", "ratio", "within_bounds"]]
    for r in report.rows:
        rows.append([r.eps, r.err, r.d_n, r.ratio, r.within_bounds])
    kappa = report.kappa
    rows.append(["kappa1", None if kappa is None else kappa.kappa1])
    rows.append(["kappa2", None if kappa is None else kappa.kappa2])
    rows.append(["verdict", report.verdict])
    if report.conditions is not None:
        for name in ("0", "I", "II"):
            rows.append([f"condition_{name}", report.conditions[name].passed])
        rows.append(["consistent", report.consistent])
    return rows


def cmd_sweep(args) -> int:
    family = _family(args)
    report = convergence_study(family, jobs=args.jobs)
    _write_csv(sweep_rows(report), args.out, f"{family.name}_sweep.csv")
    return EXIT_DEGENERATE if report.verdict == "degenerate" else EXIT_OK


def cmd_demo(args) -> int:
    N = args.grid or appendix_demo.DEFAULT_DIMENSION
    print(appendix_demo.format_table(appendix_demo.demo_table(N)))
    return EXIT_OK


def cmd_catalog(args) -> int:
    for name, cfg in CATALOG.items():
        print(f"{name:20s} {cfg.get('description', '')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bvpcont", description="Parameter-dependent linear boundary-value problems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def problem_args(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--preset", help="name of a built-in problem")
        p.add_argument("--out", help="output directory (default: standard output)")
        p.add_argument("--tol", type=float, help="integrator tolerance")
        p.add_argument("--grid", type=int, help="number of uniform grid panels")

    p = sub.add_parser("solve", help="solve one instance")
    problem_args(p)
    p.add_argument("--eps", type=float, default=0.0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="evaluate the limit conditions")
    problem_args(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="convergence study along the parameter schedule")
    problem_args(p)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo-appendix", help="partial-sum and inverse blow-up table")
    p.add_argument("--grid", type=int, help="dimension N")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("catalog", help="built-in problems")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
