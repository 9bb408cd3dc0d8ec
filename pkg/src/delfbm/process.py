"""Covariance formulas and exact Gaussian simulation.

Two models are supported:

* ``fbm`` -- fractional Brownian motion, the zero-mean Gaussian process
  with ``Cov(X_s, X_t) = (sigma^2/2)(|t|^{2H} + |s|^{2H} - |t-s|^{2H})``.
* ``delampertized`` -- the stationary inverse Lamperti transform of an fBm
  with time-contraction rate ``theta``.  For the standard (unit-variance)
  process the covariance depends on the lag only:
  ``c(dt) = cosh(theta*H*dt) - 2^{2H-1} |sinh(theta*dt/2)|^{2H}``.

Simulation is exact: the standard-model covariance matrix is Cholesky
factorized (with a small escalating diagonal jitter if needed) and applied
to a seeded standard Gaussian vector.  Location/scale (mu, sigma) are
applied afterwards, so the factorized matrix always has unit diagonal in
the delampertized case.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, GridError, ParameterError, SeriesFormatError

__all__ = [
    "ModelParams",
    "TimeGrid",
    "TimeSeries",
    "fbm_covariance",
    "delamperti_covariance",
    "build_covariance_matrix",
    "cholesky_with_jitter",
    "sample_path",
    "add_white_noise",
    "make_rng",
    "replication_rng",
    "read_series_csv",
    "write_series_csv",
    "JITTER_LADDER",
]

# Diagonal jitter ladder tried in order when plain Cholesky fails.
JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)

MODELS = ("fbm", "delampertized")


@dataclass(frozen=True)
class ModelParams:
    """Parameters of a (possibly affine-shifted) delampertized fBm.

    H is the Hurst exponent in (0, 1), theta the positive time-change
    rate, sigma the volatility scale and mu a location shift.
    """

    H: float
    theta: float
    sigma: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ParameterError(f"H must lie in (0, 1), got {self.H}")
        if not self.theta > 0.0:
            raise ParameterError(f"theta must be positive, got {self.theta}")
        if not self.sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing observation times.

    Singleton grids are accepted so that one-point covariance matrices and
    degenerate likelihoods remain expressible; estimation requires >= 2.
    """

    times: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        if t.ndim != 1 or t.size < 1:
            raise GridError("time grid must be a non-empty 1-D array")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise GridError("observation times must be strictly increasing")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class TimeSeries:
    """One observed value per grid time."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.shape != self.grid.times.shape:
            raise GridError(
                f"values length {v.size} does not match grid length {len(self.grid)}"
            )
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return len(self.grid)


def _check_model_domain(H: float, theta_or_sigma: float, name: str) -> None:
    if not 0.0 < H < 1.0:
        raise ParameterError(f"H must lie in (0, 1), got {H}")
    if not theta_or_sigma > 0.0:
        raise ParameterError(f"{name} must be positive, got {theta_or_sigma}")


def fbm_covariance(s, t, H: float, sigma: float = 1.0):
    """Covariance of an fBm at times s and t.

    Returns ``(sigma^2/2)(|t|^{2H} + |s|^{2H} - |t-s|^{2H})``; accepts
    scalars or broadcastable arrays.
    """
    _check_model_domain(H, sigma, "sigma")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    two_h = 2.0 * H
    out = 0.5 * sigma**2 * (
        np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h
    )
    return float(out) if out.ndim == 0 else out


def delamperti_covariance(dt, H: float, theta: float):
    """Lag-dt covariance of a standard delampertized fBm.

    Evaluates ``cosh(theta*H*dt) - 2^{2H-1} |sinh(theta*dt/2)|^{2H}``; the
    process is stationary (the value depends on the lag only, evenly) and
    equals 1 at dt = 0.  The two terms share the leading ``e^{theta*H*dt}/2``
    growth, so the difference is computed in a cancellation-free form
    ``e^a/2 * (e^{-2a} - expm1(2H*log1p(-e^{-2b})))`` with ``a = theta*H*|dt|``
    and ``b = theta*|dt|/2``, which stays accurate (and finite) at lags
    where the naive difference would lose every digit or overflow.
    """
    _check_model_domain(H, theta, "theta")
    dt = np.asarray(dt, dtype=float)
    a = theta * H * np.abs(dt)
    b = 0.5 * theta * np.abs(dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.exp(-2.0 * b)
        bracket = np.exp(-2.0 * a) - np.expm1(2.0 * H * np.log1p(-u))
        exact = np.exp(a - math.log(2.0) + np.log(bracket))
        # once e^{-2b} underflows, fall back to the tail expansion
        # e^{-a}/2 + H e^{-2(1-H)b}, whose omitted terms are below one ulp
        tail = 0.5 * np.exp(-a) + H * np.exp(a - 2.0 * b)
        out = np.where(u > 0.0, exact, tail)
    return float(out) if out.ndim == 0 else out


def build_covariance_matrix(grid: TimeGrid, params: ModelParams, model: str) -> np.ndarray:
    """Covariance matrix of the *standard* (sigma=1, mu=0) model on a grid.

    The location/scale of ``params`` is deliberately not applied here;
    :func:`sample_path` scales the factorized standard matrix instead.
    For ``model="fbm"`` all times must be positive, except that a leading
    t=0 is allowed and produces an exact zero row/column.
    """
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")
    t = grid.times
    if model == "delampertized":
        dt = t[:, None] - t[None, :]
        return np.asarray(delamperti_covariance(dt, params.H, params.theta))
    if np.any(t < 0.0):
        raise GridError("fbm grids must have non-negative times")
    return np.asarray(fbm_covariance(t[:, None], t[None, :], params.H, 1.0))


def cholesky_with_jitter(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, adding escalating diagonal jitter if needed.

    Returns ``(L, jitter_used)``.  Raises :class:`ConditioningError` when
    the matrix stays non-factorizable at the top of the ladder.
    """
    n = matrix.shape[0]
    eye = np.eye(n)
    for jitter in JITTER_LADDER:
        try:
            L = np.linalg.cholesky(matrix + jitter * eye if jitter else matrix)
            return L, jitter
        except np.linalg.LinAlgError:
            continue
    raise ConditioningError(
        f"covariance matrix not positive definite after jitter up to {JITTER_LADDER[-1]:g}"
    )


def make_rng(seed) -> np.random.Generator:
    """Seeded generator; a Generator instance passes through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replication_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent stream for replication ``index`` of a base seed.

    Uses SeedSequence spawn keys, so streams do not depend on the order or
    number of replications drawn: replication r always sees the same
    stream for a given base seed.
    """
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(index,)))


def sample_path(grid: TimeGrid, params: ModelParams, model: str, seed) -> TimeSeries:
    """Draw one exact Gaussian path: ``mu + sigma * (L @ g)``.

    ``L`` is the (jittered if necessary) Cholesky factor of the standard
    covariance on the grid and ``g`` a seeded standard normal vector, so
    identical seed and inputs reproduce the path bit for bit.
    """
    rng = make_rng(seed)
    t = grid.times
    zero_mask = None
    if model == "fbm" and t.size and t[0] == 0.0:
        # X_0 = 0 exactly: factor the positive-time block and re-insert.
        zero_mask = np.zeros(t.size, dtype=bool)
        zero_mask[0] = True
        sub = TimeGrid(t[1:]) if t.size > 1 else None
    else:
        sub = None

    if zero_mask is None:
        sigma_std = build_covariance_matrix(grid, params, model)
        L, _ = cholesky_with_jitter(sigma_std)
        g = rng.standard_normal(t.size)
        core = L @ g
    else:
        core = np.zeros(t.size)
        if sub is not None:
            sigma_std = build_covariance_matrix(sub, params, model)
            L, _ = cholesky_with_jitter(sigma_std)
            g = rng.standard_normal(len(sub))
            core[1:] = L @ g
    return TimeSeries(grid, params.mu + params.sigma * core)


def add_white_noise(series: TimeSeries, noise_sd: float, seed) -> TimeSeries:
    """Add independent centered Gaussian noise to every observation."""
    if noise_sd < 0.0:
        raise ParameterError(f"noise_sd must be non-negative, got {noise_sd}")
    if noise_sd == 0.0:
        return series
    rng = make_rng(seed)
    return TimeSeries(series.grid, series.values + noise_sd * rng.standard_normal(len(series)))


# ---------------------------------------------------------------------------
# CSV serialization: header "time,value", one row per observation in time
# order, '.' decimal separator.
# ---------------------------------------------------------------------------

def write_series_csv(series: TimeSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "value"])
        for t, v in zip(series.times, series.values):
            writer.writerow([repr(float(t)), repr(float(v))])


def series_to_csv_bytes(series: TimeSeries) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(["time", "value"])
    for t, v in zip(series.times, series.values):
        writer.writerow([repr(float(t)), repr(float(v))])
    return buf.getvalue().encode()


def read_series_csv(path) -> TimeSeries:
    """Parse a ``time,value`` CSV; malformed rows name their line number."""
    if not os.path.exists(path):
        raise SeriesFormatError(f"series file not found: {path}")
    times: list[float] = []
    values: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["time", "value"]:
            raise SeriesFormatError(
                f"expected header 'time,value' in {path}, got {header!r}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise SeriesFormatError(f"row has fewer than 2 fields", line=lineno)
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError as exc:
                raise SeriesFormatError(f"unparseable number: {exc}", line=lineno)
    try:
        return TimeSeries(TimeGrid(np.asarray(times)), np.asarray(values))
    except GridError as exc:
        raise SeriesFormatError(f"invalid series content: {exc}")
