"""Simulation-study harness: table replications, diagnostics, landscapes.

Tables mirror the ones produced by the CLI:

* ``t1`` -- recover one (H, theta) truth, both estimators.
* ``t2`` -- theta sweep {3, 10, 30, 50} at fixed H.
* ``t3`` -- H sweep {0.35, 0.5, 0.7, 0.8} on short series (N = 50).
* ``t_aam_long`` -- H sweep on long series (N = 1000), AAM only.
* ``timing`` -- fit wall time for N in {25 ... 1000}.
* ``misspec`` -- paired clean / noise-contaminated replications scored by
  the specification diagnostic.
* ``landscape`` -- objective surfaces of one simulated path.

Replication r of row i always consumes the random stream spawned from
``(base_seed, (row=i, rep=r))``, so reports are independent of execution
order and worker count.  Estimate files are byte-reproducible under a
fixed seed; wall times go to a separate timing file because they never
are.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aam import (
    KernelSpec,
    aam_objective,
    aam_objective_detail,
    fit_aam,
    raw_increment_loglog,
)
from .errors import DelfbmError, ParameterError
from .likelihood import EstimationResult, fit_ml, log_likelihood
from .process import (
    ModelParams,
    TimeGrid,
    TimeSeries,
    add_white_noise,
    sample_path,
)

__all__ = [
    "StudyConfig",
    "StudyResult",
    "DiagnosisReport",
    "simulation_grid",
    "simulate_replication",
    "run_study",
    "diagnose_series",
    "evaluate_landscape",
    "write_rows_csv",
    "write_rows_jsonl",
]

TABLES = ("t1", "t2", "t3", "t_aam_long", "timing", "misspec", "landscape")

REPLICATION_COLUMNS = [
    "table", "row", "method", "replication", "status", "H_hat", "theta_hat",
    "objective", "H_slope", "alpha_hat", "iterations", "converged", "score",
]
AGGREGATE_COLUMNS = [
    "table", "row", "method", "n_ok", "H_mean", "H_sd",
    "theta_mean", "theta_sd", "score_median",
]
TIMING_COLUMNS = ["table", "row", "method", "replication", "wall_time"]
LANDSCAPE_COLUMNS = ["H", "theta", "log_likelihood", "objective"]


@dataclass(frozen=True)
class StudyConfig:
    table: str = "t1"
    replications: int = 100
    n_obs: int = 200
    step: float = 0.001
    H: float = 0.65
    theta: float = 30.0
    sigma: float = 1.0
    mu: float = 0.0
    base_seed: int = 0
    noise_sd: float = 0.4
    rho: float = 0.2
    n_scales: int = 15
    kernel: KernelSpec = KernelSpec()
    methods: tuple = ("ml", "aam")
    jobs: int = 1

    def __post_init__(self):
        if self.table not in TABLES:
            raise ParameterError(f"table must be one of {TABLES}, got {self.table!r}")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if self.n_obs < 2:
            raise ParameterError("n_obs must be >= 2")


@dataclass
class StudyResult:
    replication_rows: list
    aggregate_rows: list
    timing_rows: list
    landscape_rows: list = field(default_factory=list)


@dataclass
class DiagnosisReport:
    Hp: float
    thetap: float
    H_slope: float
    alpha_hat: float
    score: float
    transformed_plot: object
    raw_plot: object
    ml_result: EstimationResult | None = None


# ---------------------------------------------------------------------------
# simulation helpers
# ---------------------------------------------------------------------------

def simulation_grid(n_obs: int, step: float) -> TimeGrid:
    """Equispaced times step, 2*step, ..., n_obs*step."""
    return TimeGrid(step * np.arange(1, n_obs + 1))


def _stream(base_seed: int, row: int, rep: int, substream: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(base_seed, spawn_key=(row, rep, substream))
    )


def simulate_replication(
    config: StudyConfig, H: float, theta: float, n_obs: int,
    row: int, rep: int, noise_sd: float = 0.0,
) -> TimeSeries:
    """Seeded path for one replication cell (optionally noise-added)."""
    grid = simulation_grid(n_obs, config.step)
    params = ModelParams(H=H, theta=theta, sigma=config.sigma, mu=config.mu)
    series = sample_path(grid, params, "delampertized", _stream(config.base_seed, row, rep, 0))
    if noise_sd > 0.0:
        series = add_white_noise(series, noise_sd, _stream(config.base_seed, row, rep, 1))
    return series


# ---------------------------------------------------------------------------
# table row schedules
# ---------------------------------------------------------------------------

def _table_rows(config: StudyConfig):
    """(label, H, theta, n_obs, noise_sd, methods) per table row."""
    c = config
    if c.table == "t1":
        return [(f"H={c.H:g};theta={c.theta:g}", c.H, c.theta, c.n_obs, 0.0, c.methods)]
    if c.table == "t2":
        return [
            (f"theta={th:g}", c.H, th, c.n_obs, 0.0, c.methods)
            for th in (3.0, 10.0, 30.0, 50.0)
        ]
    if c.table == "t3":
        return [
            (f"H={h:g}", h, c.theta, 50, 0.0, c.methods)
            for h in (0.35, 0.5, 0.7, 0.8)
        ]
    if c.table == "t_aam_long":
        return [
            (f"H={h:g}", h, c.theta, 1000, 0.0, ("aam",))
            for h in (0.4, 0.55, 0.65, 0.75, 0.8)
        ]
    if c.table == "timing":
        return [
            (f"N={n}", c.H, c.theta, n, 0.0, c.methods)
            for n in (25, 50, 75, 100, 150, 200, 300, 500, 1000)
        ]
    if c.table == "misspec":
        # one schedule entry per replication pair; the task itself emits a
        # clean and a noisy row scored at shared parameters
        return [("pair", c.H, c.theta, c.n_obs, c.noise_sd, ("ml",))]
    raise ParameterError(f"table {c.table!r} has no replication schedule")


# ---------------------------------------------------------------------------
# one replication
# ---------------------------------------------------------------------------

def _fit(series: TimeSeries, method: str, config: StudyConfig) -> EstimationResult:
    if method == "ml":
        return fit_ml(series)
    if method == "aam":
        return fit_aam(
            series, rho=config.rho, n_scales=config.n_scales, kernel=config.kernel
        )
    raise ParameterError(f"unknown method {method!r}")


def _replication_task(args):
    """Worker body: returns (sort_key, replication_rows, timing_rows)."""
    config, row_index, label, H, theta, n_obs, noise_sd, methods, rep = args
    if config.table == "misspec":
        return _misspec_pair_task(config, row_index, H, theta, n_obs, noise_sd, rep)
    series = simulate_replication(config, H, theta, n_obs, row_index, rep, noise_sd)
    rep_rows, timing_rows = [], []
    for method in methods:
        base = _empty_row(config.table, label, method, rep)
        try:
            result = _fit(series, method, config)
            base.update(
                H_hat=result.H_hat, theta_hat=result.theta_hat,
                objective=result.objective_at_optimum,
                H_slope=result.H_slope, alpha_hat=result.alpha_hat,
                iterations=result.iterations, converged=result.converged,
            )
            timing_rows.append({
                "table": config.table, "row": label, "method": method,
                "replication": rep, "wall_time": result.wall_time,
            })
        except DelfbmError as exc:
            base["status"] = f"error: {exc}"
        rep_rows.append(base)
    return (row_index, rep), rep_rows, timing_rows


def _empty_row(table, label, method, rep):
    return {
        "table": table, "row": label, "method": method,
        "replication": rep, "status": "ok",
        "H_hat": None, "theta_hat": None, "objective": None,
        "H_slope": None, "alpha_hat": None,
        "iterations": None, "converged": None, "score": None,
    }


def _misspec_pair_task(config, row_index, H, theta, n_obs, noise_sd, rep):
    """One clean/noisy pair sharing a path, scored at the clean-fit pair.

    Fitting parameters on the noisy member itself would hide the
    misspecification: the likelihood optimum of noise-dominated data sits
    at a small Hurst value whose transformed log-log slope happens to
    match it.  Scoring both members at the clean fit isolates what the
    added noise does to the plot.
    """
    clean = simulate_replication(config, H, theta, n_obs, 0, rep, 0.0)
    noisy = add_white_noise(clean, noise_sd, _stream(config.base_seed, 0, rep, 1))
    rep_rows, timing_rows = [], []
    labels = ("clean", f"noisy={noise_sd:g}")
    try:
        fit = fit_ml(clean)
    except DelfbmError as exc:
        for label in labels:
            row = _empty_row(config.table, label, "ml", rep)
            row["status"] = f"error: {exc}"
            rep_rows.append(row)
        return (row_index, rep), rep_rows, timing_rows
    timing_rows.append({
        "table": config.table, "row": "clean", "method": "ml",
        "replication": rep, "wall_time": fit.wall_time,
    })
    for label, series in zip(labels, (clean, noisy)):
        row = _empty_row(config.table, label, "ml", rep)
        row.update(
            H_hat=fit.H_hat, theta_hat=fit.theta_hat,
            objective=fit.objective_at_optimum,
            iterations=fit.iterations, converged=fit.converged,
        )
        try:
            _, h_slope, alpha, _ = aam_objective_detail(
                series, fit.H_hat, fit.theta_hat,
                rho=config.rho, n_scales=config.n_scales, kernel=config.kernel,
            )
            row.update(H_slope=h_slope, alpha_hat=alpha, score=abs(h_slope - fit.H_hat))
        except DelfbmError as exc:
            row["status"] = f"error: {exc}"
        rep_rows.append(row)
    return (row_index, rep), rep_rows, timing_rows


def _aggregate(rows):
    groups: dict[tuple, list] = {}
    order: list[tuple] = []
    for row in rows:
        key = (row["table"], row["row"], row["method"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        ok = [r for r in groups[key] if r["status"] == "ok"]
        h = np.asarray([r["H_hat"] for r in ok], dtype=float)
        th = np.asarray([r["theta_hat"] for r in ok], dtype=float)
        scores = [r["score"] for r in ok if r["score"] is not None]
        agg = {
            "table": key[0], "row": key[1], "method": key[2], "n_ok": len(ok),
            "H_mean": float(h.mean()) if len(ok) else None,
            "H_sd": float(h.std(ddof=1)) if len(ok) > 1 else (0.0 if len(ok) else None),
            "theta_mean": float(th.mean()) if len(ok) else None,
            "theta_sd": float(th.std(ddof=1)) if len(ok) > 1 else (0.0 if len(ok) else None),
            "score_median": float(np.median(scores)) if scores else None,
        }
        out.append(agg)
    return out


def _timing_means(timing_rows):
    groups: dict[tuple, list] = {}
    order: list[tuple] = []
    for row in timing_rows:
        key = (row["table"], row["row"], row["method"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row["wall_time"])
    means = []
    for key in order:
        means.append({
            "table": key[0], "row": key[1], "method": key[2],
            "replication": "mean",
            "wall_time": float(np.mean(groups[key])),
        })
    return means


def run_study(config: StudyConfig) -> StudyResult:
    """Run every replication of a table and aggregate the results.

    Replications are independent and may run in a process pool
    (``config.jobs``); row order in the report is by (row, replication)
    regardless of scheduling.
    """
    if config.table == "landscape":
        return _landscape_study(config)

    tasks = []
    for row_index, (label, H, theta, n_obs, noise_sd, methods) in enumerate(
        _table_rows(config)
    ):
        for rep in range(config.replications):
            tasks.append(
                (config, row_index, label, H, theta, n_obs, noise_sd, methods, rep)
            )

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outputs = list(pool.map(_replication_task, tasks, chunksize=1))
    else:
        outputs = [_replication_task(t) for t in tasks]

    outputs.sort(key=lambda item: item[0])
    rep_rows = [r for _, rows, _ in outputs for r in rows]
    timing_rows = [r for _, _, rows in outputs for r in rows]
    timing_rows = timing_rows + _timing_means(timing_rows)
    return StudyResult(rep_rows, _aggregate(rep_rows), timing_rows)


def _landscape_study(config: StudyConfig) -> StudyResult:
    series = simulate_replication(
        config, config.H, config.theta, config.n_obs, row=0, rep=0
    )
    h_values = np.linspace(0.3, 0.9, 13)
    theta_values = np.exp(np.linspace(math.log(5.0), math.log(120.0), 13))
    rows, _ = evaluate_landscape(
        series, h_values, theta_values,
        rho=config.rho, n_scales=config.n_scales, kernel=config.kernel,
    )
    return StudyResult([], [], [], landscape_rows=rows)


# ---------------------------------------------------------------------------
# misspecification diagnostic
# ---------------------------------------------------------------------------

def diagnose_series(
    series: TimeSeries,
    Hp: float | None = None,
    thetap: float | None = None,
    rho: float = 0.2,
    n_scales: int = 15,
    kernel: KernelSpec = KernelSpec(),
) -> DiagnosisReport:
    """Specification diagnostic of a series at (H', theta').

    When the pair is not given it is taken from an internal ML fit.  The
    score ``|H_slope - H'|`` is near zero only when the stationary-fBm
    model explains the data at the supplied parameters.
    """
    ml_result = None
    if Hp is None or thetap is None:
        ml_result = fit_ml(series)
        Hp, thetap = ml_result.H_hat, ml_result.theta_hat
    _, h_slope, alpha, plot = aam_objective_detail(
        series, Hp, thetap, rho=rho, n_scales=n_scales, kernel=kernel
    )
    raw_plot = raw_increment_loglog(series) if len(series) >= 3 else None
    return DiagnosisReport(
        Hp=Hp, thetap=thetap, H_slope=h_slope, alpha_hat=alpha,
        score=abs(h_slope - Hp),
        transformed_plot=plot, raw_plot=raw_plot, ml_result=ml_result,
    )


# ---------------------------------------------------------------------------
# objective landscapes
# ---------------------------------------------------------------------------

def evaluate_landscape(
    series: TimeSeries,
    h_values,
    theta_values,
    rho: float = 0.2,
    n_scales: int = 15,
    kernel: KernelSpec = KernelSpec(),
):
    """Both objectives on a (H, theta) grid, plus a ridge summary.

    Cells where an objective cannot be evaluated hold None.  The summary
    reports the maximum-likelihood cell and compares the likelihood range
    along theta (at the best H) with the range along H (at the best
    theta): a much smaller theta-range is the ridge that makes theta
    weakly identified.
    """
    h_values = np.atleast_1d(np.asarray(h_values, dtype=float))
    theta_values = np.atleast_1d(np.asarray(theta_values, dtype=float))
    rows = []
    for h in h_values:
        for theta in theta_values:
            try:
                ll = log_likelihood(series, h, theta).value
            except DelfbmError:
                ll = None
            obj = aam_objective(series, h, theta, rho=rho, n_scales=n_scales, kernel=kernel)
            rows.append({
                "H": float(h), "theta": float(theta),
                "log_likelihood": ll,
                "objective": float(obj) if np.isfinite(obj) else None,
            })

    finite = [r for r in rows if r["log_likelihood"] is not None]
    summary = {"best_H": None, "best_theta": None, "best_log_likelihood": None,
               "range_along_theta": None, "range_along_H": None, "ridge_axis": None}
    if finite:
        best = max(finite, key=lambda r: r["log_likelihood"])
        along_theta = [
            r["log_likelihood"] for r in finite if r["H"] == best["H"]
        ]
        along_h = [
            r["log_likelihood"] for r in finite if r["theta"] == best["theta"]
        ]
        range_theta = max(along_theta) - min(along_theta) if len(along_theta) > 1 else 0.0
        range_h = max(along_h) - min(along_h) if len(along_h) > 1 else 0.0
        summary.update(
            best_H=best["H"], best_theta=best["theta"],
            best_log_likelihood=best["log_likelihood"],
            range_along_theta=range_theta, range_along_H=range_h,
            ridge_axis="theta" if range_theta < range_h else "H",
        )
    return rows, summary


# ---------------------------------------------------------------------------
# row serialization (CSV and JSON-lines views of the same tables)
# ---------------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(row.get(c)) for c in columns) + "\n")


def write_rows_jsonl(path, columns, rows) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps({c: row.get(c) for c in columns}) + "\n")
