"""Direct and inverse Lamperti transforms with a time-contraction rate.

The direct transform maps a stationary series (T, S) to the self-similar
candidate ``T' = exp(theta'*T)``, ``S' = exp(theta'*H'*T) * S``; the
inverse maps a positive-time series back via ``t = ln(T)/theta``,
``value = T^{-H} * S``.  The two are exact algebraic inverses of each
other at matched parameters.

Composing inverse (H, theta) and direct (H', theta') transforms of one
process gives ``Z_t = t^h * X_{t^{theta/theta'}}`` with
``h = H' - (theta/theta') * H``; :func:`composed_process_time_map`
exposes that scale factor and time mapping (the process is extended by
``Z_0 = 0``, which callers handle at t = 0).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, TransformRangeError
from .process import TimeGrid, TimeSeries

__all__ = [
    "lamperti_direct_series",
    "lamperti_inverse_series",
    "composed_process_time_map",
    "EXP_ARG_MAX",
]

# exp() overflows near 709.78 for float64; reject slightly earlier.
EXP_ARG_MAX = 700.0


def _check_rate(value: float, name: str) -> None:
    if not value > 0.0:
        raise ParameterError(f"{name} must be positive, got {value}")


def _check_exponent(value: float, name: str) -> None:
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")


def lamperti_direct_series(series: TimeSeries, Hp: float, thetap: float) -> TimeSeries:
    """Transform an observed stationary series with trial (H', theta').

    Raises :class:`TransformRangeError` naming the first offending index
    when ``exp(theta' * T_i)`` would overflow.
    """
    _check_exponent(Hp, "Hp")
    _check_rate(thetap, "thetap")
    t = series.times
    args = thetap * t
    too_big = args > EXP_ARG_MAX
    if np.any(too_big):
        idx = int(np.argmax(too_big))
        raise TransformRangeError(
            f"exp({args[idx]:.1f}) overflows at index {idx} (time {t[idx]:g})",
            index=idx,
        )
    new_times = np.exp(args)
    new_values = np.exp(Hp * args) * series.values
    if new_times.size > 1 and not np.all(np.diff(new_times) > 0.0):
        # underflow of exp() for very negative times collapses the grid
        raise TransformRangeError("transformed times are no longer strictly increasing")
    return TimeSeries(TimeGrid(new_times), new_values)


def lamperti_inverse_series(series: TimeSeries, H: float, theta: float) -> TimeSeries:
    """Map a positive-time series to its stationary counterpart."""
    _check_exponent(H, "H")
    _check_rate(theta, "theta")
    t = series.times
    if np.any(t <= 0.0):
        raise ParameterError("inverse transform requires strictly positive times")
    new_times = np.log(t) / theta
    new_values = t ** (-H) * series.values
    return TimeSeries(TimeGrid(new_times), new_values)


def composed_process_time_map(
    t: float, H: float, theta: float, Hp: float, thetap: float
) -> tuple[float, float]:
    """Scale factor and mapped time of the inverse-then-direct composition.

    Returns ``(t^h, t^{theta/theta'})`` with ``h = H' - (theta/theta')*H``,
    so the composed process at time t is ``t^h * X`` evaluated at the
    mapped time.  Only defined for t > 0 (the t = 0 extension is the
    caller's responsibility).
    """
    _check_exponent(H, "H")
    _check_exponent(Hp, "Hp")
    _check_rate(theta, "theta")
    _check_rate(thetap, "thetap")
    if not t > 0.0:
        raise ParameterError(f"composed map requires t > 0, got {t}")
    ratio = theta / thetap
    h = Hp - ratio * H
    return t**h, t**ratio
