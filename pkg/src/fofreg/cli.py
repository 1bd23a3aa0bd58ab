"""Command-line interface: simulate, fit, diagnose.

Exit codes: 0 success, 1 usage error, 2 data error, 3 persistently
non-identifiable specification (a difference-penalty fit on flagged data
without a countermeasure; the diagnostic report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .basis import bspline_basis, difference_penalty, quadrature_weights
from .diagnostics import diagnose
from .fit import NonIdentifiableError, assemble_design, select_smoothing
from .harness import PENALTY_KINDS, build_s_penalty, default_config, plot_data_tables, run_config
from .penalties import PenaltyRecipe

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NON_IDENTIFIABLE = 3

_DIFFERENCE_ORDER = {"d1": 1, "d2": 2, "d1c": 1, "d2c": 2}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fofreg",
        description="Penalized function-on-function regression with identifiability diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the factorial simulation study")
    sim.add_argument("--config", help="JSON config; omit for the desk-scale default")
    sim.add_argument("--out", help="results CSV path (falls back to the config's 'out')")
    sim.add_argument("--jobs", type=int, help="worker processes (config 'jobs', default 1)")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument(
        "--plot-data",
        action="store_true",
        help="also write long-format CSVs grouped like the study figures",
    )

    fit_p = sub.add_parser("fit", help="fit a coefficient surface to CSV data")
    fit_p.add_argument("--x", required=True, help="covariate curves (wide CSV)")
    fit_p.add_argument("--y", required=True, help="response curves (wide CSV)")
    fit_p.add_argument("--ks", type=int, required=True)
    fit_p.add_argument("--kt", type=int, required=True)
    fit_p.add_argument("--penalty", required=True, choices=PENALTY_KINDS)
    fit_p.add_argument("--epsilon", type=float, default=0.1)
    fit_p.add_argument("--fame-floor", type=float, default=1e-10)
    fit_p.add_argument(
        "--lambda-grid",
        default="1e-4:1e4:7",
        help="log-spaced smoothing grid as min:max:num",
    )
    fit_p.add_argument("--out", required=True, help="fit summary JSON path")
    fit_p.add_argument("--surface", help="long-format surface CSV path")
    fit_p.add_argument("--full", action="store_true", help="include theta in the JSON")

    diag = sub.add_parser("diagnose", help="identifiability report for covariate curves")
    diag.add_argument("--x", required=True)
    diag.add_argument("--ks", type=int, required=True)
    diag.add_argument("--penalty", required=True, choices=["d1", "d2"])
    diag.add_argument("--out", required=True, help="report JSON path")

    return parser


def _parse_lambda_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("expected min:max:num")
    lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    if lo <= 0 or hi <= lo or num < 1:
        raise ValueError("need 0 < min < max and num >= 1")
    return np.logspace(np.log10(lo), np.log10(hi), num)


def _cmd_simulate(args) -> int:
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            print(f"fofreg: cannot read config: {err}", file=sys.stderr)
            return EXIT_DATA
    else:
        config = default_config()
    if args.seed is not None:
        config["seed"] = args.seed
    out = args.out or config.get("out")
    if not out:
        print("fofreg: no output path: pass --out or put 'out' in the config", file=sys.stderr)
        return EXIT_USAGE
    jobs = args.jobs if args.jobs is not None else int(config.get("jobs", 1))
    try:
        results = run_config(config, jobs=jobs)
    except (KeyError, ValueError) as err:
        print(f"fofreg: bad config: {err}", file=sys.stderr)
        return EXIT_DATA
    io.write_results_csv(results, out)
    if args.plot_data:
        io.write_long_tables(plot_data_tables(results), out)
    n_ok = sum(1 for r in results if r.status == "ok")
    print(f"wrote {len(results)} rows ({n_ok} ok) to {out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        lam_grid = _parse_lambda_grid(args.lambda_grid)
    except ValueError as err:
        print(f"fofreg: bad --lambda-grid: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        x = io.read_functional_csv(args.x, "X")
        y = io.read_functional_csv(args.y, "Y")
        w = quadrature_weights(x.grid)
        b_s = bspline_basis(x.grid, args.ks, 3)
        b_t = bspline_basis(y.grid, args.kt, 3)
        if y.n_curves != x.n_curves:
            raise ValueError("x and y must hold the same number of curves")
    except (OSError, ValueError) as err:
        print(f"fofreg: data error: {err}", file=sys.stderr)
        return EXIT_DATA

    try:
        recipe = PenaltyRecipe(args.penalty, args.epsilon, args.fame_floor)
        p_s = build_s_penalty(recipe, args.ks, x, w, b_s)
    except ValueError as err:
        print(f"fofreg: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    p_t = difference_penalty(args.kt, 1)
    report = diagnose(x, w, b_s, p_s)

    if report.flagged and args.penalty in ("d1", "d2"):
        print(
            "fofreg: warning: specification flagged as persistently "
            "non-identifiable (kernel overlap); refusing to fit without a "
            "countermeasure. Try the corresponding +C penalty "
            f"('{args.penalty}c'), a full-rank penalty, ridge, or fame.",
            file=sys.stderr,
        )
        io.write_json({"status": "non-identifiable", "diagnostics": report.to_dict()}, args.out)
        return EXIT_NON_IDENTIFIABLE

    constraints = report.constraint_basis if args.penalty in ("d1c", "d2c") else None
    design = assemble_design(x, w, b_s, b_t)
    try:
        fit = select_smoothing(
            design,
            p_s,
            p_t,
            y.values,
            lambdas_s=lam_grid,
            lambdas_t=lam_grid,
            constraint_basis=constraints,
            weights=w,
            B_s=b_s,
        )
    except NonIdentifiableError as err:
        print(f"fofreg: non-identifiable: {err}", file=sys.stderr)
        io.write_json({"status": "non-identifiable", "diagnostics": report.to_dict()}, args.out)
        return EXIT_NON_IDENTIFIABLE
    fit.diagnostics = report
    payload = {"status": "ok", **fit.to_dict(include_theta=args.full)}
    io.write_json(payload, args.out)
    if args.surface:
        io.write_surface_csv(fit.surface, x.grid.points, y.grid.points, args.surface)
    print(
        f"fit ok: lambda_s={fit.lambda_s:g} lambda_t={fit.lambda_t:g} "
        f"gcv={fit.gcv:.6g} constraints={fit.n_constraints}"
    )
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    try:
        x = io.read_functional_csv(args.x, "X")
        w = quadrature_weights(x.grid)
        b_s = bspline_basis(x.grid, args.ks, 3)
    except (OSError, ValueError) as err:
        print(f"fofreg: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    p_s = difference_penalty(args.ks, _DIFFERENCE_ORDER[args.penalty])
    report = diagnose(x, w, b_s, p_s)
    io.write_json(report.to_dict(), args.out)
    print(
        f"kappa={'inf' if np.isinf(report.kappa) else format(report.kappa, 'g')} "
        f"overlap={report.overlap:.4f} flagged={str(report.flagged).lower()}"
    )
    return EXIT_OK


def cli(argv: list[str] | None = None) -> int:
    """Entry point returning the exit code (0/1/2/3)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; remap to our convention, keep 0 for --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    handlers = {"simulate": _cmd_simulate, "fit": _cmd_fit, "diagnose": _cmd_diagnose}
    try:
        return handlers[args.command](args)
    except OSError as err:
        print(f"fofreg: i/o error: {err}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
