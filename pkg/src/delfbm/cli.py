"""Command-line interface.

Subcommands: ``simulate``, ``estimate``, ``study``, ``diagnose``,
``landscape``.  All tabular output is CSV by default; ``--format json``
mirrors every table as JSON-lines.  Exit codes: 0 on success, 2 for
input-side problems (bad flags, malformed files, out-of-domain
parameters), 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from .aam import KernelSpec, fit_aam
from .errors import (
    ConditioningError,
    DelfbmError,
    EstimationError,
    GridError,
    ParameterError,
    SeriesFormatError,
    TransformRangeError,
)
from .likelihood import fit_ml
from .process import read_series_csv, write_series_csv
from .study import (
    AGGREGATE_COLUMNS,
    LANDSCAPE_COLUMNS,
    REPLICATION_COLUMNS,
    TIMING_COLUMNS,
    StudyConfig,
    diagnose_series,
    evaluate_landscape,
    run_study,
    simulate_replication,
    write_rows_csv,
    write_rows_jsonl,
)

INPUT_ERRORS = (SeriesFormatError, ParameterError, GridError)
NUMERICAL_ERRORS = (ConditioningError, EstimationError, TransformRangeError)

ESTIMATE_COLUMNS = [
    "file", "input_sha256", "method", "H_hat", "theta_hat", "objective",
    "H_slope", "alpha_hat", "iterations", "converged", "wall_time",
]
PLOT_COLUMNS = ["ln_tau", "ln_moment", "total_weight"]


def _add_model_flags(parser, include_noise=True):
    parser.add_argument("--H", type=float, default=0.65, help="Hurst exponent")
    parser.add_argument("--theta", type=float, default=30.0, help="time-change rate")
    parser.add_argument("--sigma", type=float, default=1.0, help="volatility scale")
    parser.add_argument("--mu", type=float, default=0.0, help="location shift")
    parser.add_argument("--n-obs", type=int, default=200, help="observations per path")
    parser.add_argument("--step", type=float, default=0.001, help="sampling interval")
    if include_noise:
        parser.add_argument("--noise-sd", type=float, default=0.0,
                            help="additive Gaussian noise standard deviation")


def _add_aam_flags(parser):
    parser.add_argument("--rho", type=float, default=0.2,
                        help="largest scale as a fraction of the signal duration")
    parser.add_argument("--n-scales", type=int, default=15,
                        help="number of scales in the log-log analysis")
    parser.add_argument("--kernel", choices=("epanechnikov", "truncated-gaussian", "box"),
                        default="epanechnikov")
    parser.add_argument("--bandwidth", type=float, default=None,
                        help="fixed kernel bandwidth (default: automatic policy)")


def _kernel_from(args) -> KernelSpec:
    return KernelSpec(family=args.kernel, bandwidth=args.bandwidth)


def _emit(rows, columns, out, fmt):
    if out is None:
        writer = sys.stdout
        if fmt == "json":
            for row in rows:
                writer.write(json.dumps({c: row.get(c) for c in columns}) + "\n")
        else:
            writer.write(",".join(columns) + "\n")
            for row in rows:
                writer.write(",".join(_text(row.get(c)) for c in columns) + "\n")
        return
    if fmt == "json":
        write_rows_jsonl(out, columns, rows)
    else:
        write_rows_csv(out, columns, rows)


def _text(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_grid(spec: str) -> np.ndarray:
    """Grid values from 'a,b,c' or 'start:stop:count[:log]'."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise ParameterError(f"grid spec must be start:stop:count[:log], got {spec!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ParameterError("grid count must be >= 1")
        if len(parts) == 4:
            return np.exp(np.linspace(np.log(start), np.log(stop), count))
        return np.linspace(start, stop, count)
    return np.asarray([float(v) for v in spec.split(",")], dtype=float)


def _plot_rows(plot):
    return [
        {"ln_tau": float(lt), "ln_moment": float(lm), "total_weight": float(w)}
        for lt, lm, w in plot.rows()
    ]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    config = StudyConfig(
        table="t1", replications=max(args.replications, 1), n_obs=args.n_obs,
        step=args.step, H=args.H, theta=args.theta, sigma=args.sigma, mu=args.mu,
        base_seed=args.seed, noise_sd=args.noise_sd,
    )
    paths = []
    for rep in range(args.replications):
        series = simulate_replication(
            config, args.H, args.theta, args.n_obs, row=0, rep=rep,
            noise_sd=args.noise_sd,
        )
        if args.replications == 1:
            path = args.out
        else:
            stem, dot, ext = args.out.rpartition(".")
            path = f"{stem}_r{rep:03d}{dot}{ext}" if dot else f"{args.out}_r{rep:03d}"
        write_series_csv(series, path)
        paths.append(path)
    print("\n".join(paths))
    return 0


def _cmd_estimate(args) -> int:
    series = read_series_csv(args.series)
    digest = hashlib.sha256(open(args.series, "rb").read()).hexdigest()
    methods = ("ml", "aam") if args.method == "both" else (args.method,)
    rows = []
    for method in methods:
        if method == "ml":
            result = fit_ml(series)
        else:
            result = fit_aam(
                series, rho=args.rho, n_scales=args.n_scales, kernel=_kernel_from(args)
            )
        rows.append({
            "file": args.series, "input_sha256": digest, "method": method,
            "H_hat": result.H_hat, "theta_hat": result.theta_hat,
            "objective": result.objective_at_optimum,
            "H_slope": result.H_slope, "alpha_hat": result.alpha_hat,
            "iterations": result.iterations, "converged": result.converged,
            "wall_time": result.wall_time,
        })
    _emit(rows, ESTIMATE_COLUMNS, args.out, args.format)
    return 0


def _cmd_study(args) -> int:
    config = StudyConfig(
        table=args.table, replications=args.replications, n_obs=args.n_obs,
        step=args.step, H=args.H, theta=args.theta, sigma=args.sigma, mu=args.mu,
        base_seed=args.seed, noise_sd=args.noise_sd, rho=args.rho,
        n_scales=args.n_scales, kernel=_kernel_from(args), jobs=args.jobs,
    )
    result = run_study(config)
    ext = "jsonl" if args.format == "json" else "csv"
    written = []
    if config.table == "landscape":
        path = f"{args.out}_landscape.{ext}"
        _emit(result.landscape_rows, LANDSCAPE_COLUMNS, path, args.format)
        written.append(path)
    else:
        for suffix, columns, rows in (
            ("replications", REPLICATION_COLUMNS, result.replication_rows),
            ("aggregate", AGGREGATE_COLUMNS, result.aggregate_rows),
            ("timing", TIMING_COLUMNS, result.timing_rows),
        ):
            path = f"{args.out}_{suffix}.{ext}"
            _emit(rows, columns, path, args.format)
            written.append(path)
    print("\n".join(written))
    return 0


def _cmd_diagnose(args) -> int:
    series = read_series_csv(args.series)
    if not args.from_ml and (args.H is None or args.theta is None):
        raise ParameterError("diagnose needs --H and --theta, or --from-ml")
    report = diagnose_series(
        series,
        Hp=None if args.from_ml else args.H,
        thetap=None if args.from_ml else args.theta,
        rho=args.rho, n_scales=args.n_scales, kernel=_kernel_from(args),
    )
    if args.out is not None:
        stem, dot, ext = args.out.rpartition(".")
        raw_path = f"{stem}.raw{dot}{ext}" if dot else f"{args.out}.raw"
        _emit(_plot_rows(report.transformed_plot), PLOT_COLUMNS, args.out, args.format)
        if report.raw_plot is not None:
            _emit(_plot_rows(report.raw_plot), PLOT_COLUMNS, raw_path, args.format)
    summary = {
        "Hp": report.Hp, "thetap": report.thetap,
        "H_slope": report.H_slope, "alpha_hat": report.alpha_hat,
        "score": report.score,
    }
    if args.format == "json":
        print(json.dumps(summary))
    else:
        print(",".join(summary))
        print(",".join(_text(v) for v in summary.values()))
    return 0


def _cmd_landscape(args) -> int:
    series = read_series_csv(args.series)
    h_values = _parse_grid(args.H)
    theta_values = _parse_grid(args.theta)
    rows, summary = evaluate_landscape(
        series, h_values, theta_values,
        rho=args.rho, n_scales=args.n_scales, kernel=_kernel_from(args),
    )
    _emit(rows, LANDSCAPE_COLUMNS, args.out, args.format)
    if args.format == "json":
        print(json.dumps(summary), file=sys.stderr)
    else:
        print(
            f"max likelihood at H={summary['best_H']}, theta={summary['best_theta']}; "
            f"range along theta {summary['range_along_theta']}, "
            f"along H {summary['range_along_H']} (ridge axis: {summary['ridge_axis']})",
            file=sys.stderr,
        )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delfbm",
        description="Simulate and estimate delampertized fractional Brownian motion.",
    )
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format (json = JSON-lines)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write seeded sample paths as CSV")
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit (H, theta) to a series file")
    p.add_argument("series")
    p.add_argument("--method", choices=("ml", "aam", "both"), default="both")
    _add_aam_flags(p)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("study", help="replication study tables")
    p.add_argument("--table", choices=(
        "t1", "t2", "t3", "t_aam_long", "timing", "misspec", "landscape"
    ), default="t1")
    _add_model_flags(p, include_noise=False)
    p.add_argument("--noise-sd", type=float, default=0.4,
                   help="noise level of the misspec table's contaminated member")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=100)
    _add_aam_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("diagnose", help="model-specification diagnostic")
    p.add_argument("series")
    p.add_argument("--H", type=float, default=None, help="trial Hurst exponent")
    p.add_argument("--theta", type=float, default=None, help="trial time-change rate")
    p.add_argument("--from-ml", action="store_true",
                   help="take the trial pair from an internal ML fit")
    _add_aam_flags(p)
    p.add_argument("--out", default=None,
                   help="transformed-plot path; raw plot goes to <out>.raw.<ext>")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("landscape", help="objective surfaces on a (H, theta) grid")
    p.add_argument("series")
    p.add_argument("--H", default="0.3:0.9:13",
                   help="H grid: 'a,b,c' or 'start:stop:count[:log]'")
    p.add_argument("--theta", default="5:120:13:log",
                   help="theta grid: 'a,b,c' or 'start:stop:count[:log]'")
    _add_aam_flags(p)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(func=_cmd_landscape)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        line = getattr(exc, "line", None)
        suffix = f" (line {line})" if line is not None else ""
        print(f"error: {exc}{suffix}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DelfbmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
