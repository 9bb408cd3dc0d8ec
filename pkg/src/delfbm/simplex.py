"""Nelder-Mead simplex search over (H, theta) with two constraint modes.

The engine runs the standard reflect/expand/contract/shrink cycle with
coefficients (1, 2, 0.5, 0.5) on a 3-vertex simplex and stops when the
two non-best vertices are relatively close to the best one:

    sum_{i=2,3} |1 - H_i/H_1| + |1 - theta_i/theta_1| <= tol

(tol defaults to 0.001) or when the iteration cap is hit, in which case
the best vertex is still returned but flagged non-converged.

Constraint handling:

* ``"transform"`` (default) -- optimize unconstrained (x, y) with
  ``H = 1/2 + arctan(x)/pi`` and ``theta = exp(y)``; every iterate maps to
  a strictly feasible pair and the simplex cannot collapse on a boundary.
* ``"box"`` -- clamp candidate vertices into
  ``[eps, 1-eps] x [eps, theta_max]`` before evaluation.
* ``"none"`` -- plain 2-D search, for objectives without domain limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "DEFAULT_INIT_SIMPLEX",
    "NelderMeadResult",
    "constrain_box",
    "transform_params",
    "inverse_transform_params",
    "nelder_mead",
    "multistart_simplices",
]

# Initial vertices (H, theta); indicative values, callers may override.
DEFAULT_INIT_SIMPLEX = ((0.45, 25.0), (0.55, 28.0), (0.50, 35.0))

BOX_EPS = 1e-4
BOX_THETA_MAX = 1e4

# Floor applied to denominators of the relative stopping criterion so a
# vertex coordinate at (or crossing) zero cannot divide by zero.
_STOP_DENOM_FLOOR = 1e-12


def constrain_box(point: tuple[float, float]) -> tuple[float, float]:
    """Clamp (H, theta) into [eps, 1-eps] x [eps, theta_max]."""
    h, theta = point
    h = min(max(h, BOX_EPS), 1.0 - BOX_EPS)
    theta = min(max(theta, BOX_EPS), BOX_THETA_MAX)
    return h, theta


def transform_params(x: float, y: float) -> tuple[float, float]:
    """Map unconstrained (x, y) to feasible (H, theta)."""
    return 0.5 + math.atan(x) / math.pi, math.exp(y)


def inverse_transform_params(H: float, theta: float) -> tuple[float, float]:
    """Exact inverse of :func:`transform_params`; errors off-domain."""
    if not 0.0 < H < 1.0:
        raise ParameterError(f"H must lie in (0, 1), got {H}")
    if not theta > 0.0:
        raise ParameterError(f"theta must be positive, got {theta}")
    return math.tan(math.pi * (H - 0.5)), math.log(theta)


@dataclass
class NelderMeadResult:
    point: tuple[float, float]
    value: float
    iterations: int
    evaluations: int
    converged: bool
    # best objective value (caller orientation) after each iteration
    trace: list = field(default_factory=list)


def _spread(params: list[tuple[float, float]]) -> float:
    """Relative closeness of vertices 2,3 to vertex 1 in (H, theta)."""
    h1, t1 = params[0]
    h1 = h1 if abs(h1) > _STOP_DENOM_FLOOR else _STOP_DENOM_FLOOR
    t1 = t1 if abs(t1) > _STOP_DENOM_FLOOR else _STOP_DENOM_FLOOR
    total = 0.0
    for h, t in params[1:]:
        total += abs(1.0 - h / h1) + abs(1.0 - t / t1)
    return total


def nelder_mead(
    objective,
    mode: str = "minimize",
    init=DEFAULT_INIT_SIMPLEX,
    constraint: str = "transform",
    max_iterations: int = 500,
    tol: float = 1e-3,
) -> NelderMeadResult:
    """Minimize or maximize ``objective(H, theta)`` with a 3-vertex simplex.

    ``init`` holds three affinely independent (H, theta) vertices (in the
    native parameter space regardless of constraint mode).  Non-finite
    objective values are treated as worst-possible; if no initial vertex
    evaluates finite the search cannot start and a
    :class:`~delfbm.errors.ParameterError` is raised.
    """
    if mode not in ("minimize", "maximize"):
        raise ParameterError(f"mode must be 'minimize' or 'maximize', got {mode!r}")
    if constraint not in ("transform", "box", "none"):
        raise ParameterError(f"unknown constraint mode {constraint!r}")
    init = [tuple(map(float, p)) for p in init]
    if len(init) != 3:
        raise ParameterError("initial simplex needs exactly 3 vertices")

    sign = 1.0 if mode == "minimize" else -1.0
    n_evals = 0

    if constraint == "transform":
        def to_params(pt):
            return transform_params(*pt)

        def sanitize(pt):
            return pt

        vertices = [np.asarray(inverse_transform_params(*p)) for p in init]
    elif constraint == "box":
        def to_params(pt):
            return (pt[0], pt[1])

        def sanitize(pt):
            return np.asarray(constrain_box((pt[0], pt[1])))

        vertices = [np.asarray(constrain_box(p)) for p in init]
    else:
        def to_params(pt):
            return (pt[0], pt[1])

        def sanitize(pt):
            return pt

        vertices = [np.asarray(p, dtype=float) for p in init]

    def evaluate(pt) -> float:
        nonlocal n_evals
        n_evals += 1
        h, t = to_params(pt)
        val = sign * objective(h, t)
        if not np.isfinite(val):
            return np.inf
        return float(val)

    values = [evaluate(v) for v in vertices]
    if not any(np.isfinite(v) for v in values):
        raise ParameterError("objective is not finite at any initial simplex vertex")

    trace: list[float] = []
    converged = False
    iteration = 0
    while iteration < max_iterations:
        # stable sort keeps earlier vertices first on ties
        order = np.argsort(values, kind="stable")
        vertices = [vertices[i] for i in order]
        values = [values[i] for i in order]

        if _spread([to_params(v) for v in vertices]) <= tol:
            converged = True
            break

        iteration += 1
        best, middle, worst = vertices
        f_best, f_middle, f_worst = values
        centroid = 0.5 * (best + middle)

        reflected = sanitize(centroid + 1.0 * (centroid - worst))
        f_reflected = evaluate(reflected)

        if f_reflected < f_best:
            expanded = sanitize(centroid + 2.0 * (reflected - centroid))
            f_expanded = evaluate(expanded)
            if f_expanded < f_reflected:
                vertices[2], values[2] = expanded, f_expanded
            else:
                vertices[2], values[2] = reflected, f_reflected
        elif f_reflected < f_middle:
            vertices[2], values[2] = reflected, f_reflected
        elif f_reflected < f_worst:
            contracted = sanitize(centroid + 0.5 * (reflected - centroid))
            f_contracted = evaluate(contracted)
            if f_contracted <= f_reflected:
                vertices[2], values[2] = contracted, f_contracted
            else:
                for i in (1, 2):
                    vertices[i] = sanitize(best + 0.5 * (vertices[i] - best))
                    values[i] = evaluate(vertices[i])
        else:
            contracted = sanitize(centroid + 0.5 * (worst - centroid))
            f_contracted = evaluate(contracted)
            if f_contracted < f_worst:
                vertices[2], values[2] = contracted, f_contracted
            else:
                for i in (1, 2):
                    vertices[i] = sanitize(best + 0.5 * (vertices[i] - best))
                    values[i] = evaluate(vertices[i])

        trace.append(sign * min(values))

    order = np.argsort(values, kind="stable")
    best_vertex = vertices[order[0]]
    best_value = values[order[0]]
    return NelderMeadResult(
        point=to_params(best_vertex),
        value=sign * best_value,
        iterations=iteration,
        evaluations=n_evals,
        converged=converged,
        trace=trace,
    )


def multistart_simplices() -> list[tuple[tuple[float, float], ...]]:
    """Three spread-out starting simplices for the optional multi-start."""
    return [
        DEFAULT_INIT_SIMPLEX,
        ((0.25, 5.0), (0.35, 8.0), (0.30, 12.0)),
        ((0.70, 60.0), (0.80, 70.0), (0.75, 90.0)),
    ]


def nelder_mead_multistart(
    objective,
    mode: str = "minimize",
    constraint: str = "transform",
    max_iterations: int = 500,
    tol: float = 1e-3,
) -> NelderMeadResult:
    """Run three searches, then polish from their three solutions.

    The final search is initialized with the three stage-one optima as its
    simplex; iteration and evaluation counts aggregate all four runs.
    """
    stage_results = [
        nelder_mead(objective, mode, init, constraint, max_iterations, tol)
        for init in multistart_simplices()
    ]
    solutions = [r.point for r in stage_results]
    # a degenerate (affinely dependent) simplex would stall: nudge apart
    if _simplex_degenerate(solutions):
        solutions = [
            solutions[0],
            (solutions[1][0] * 1.01 + 1e-3, solutions[1][1] * 1.02 + 1e-3),
            (solutions[2][0] * 0.99 + 2e-3, solutions[2][1] * 0.98 + 2e-3),
        ]
        if constraint != "none":
            solutions = [constrain_box(p) for p in solutions]
    final = nelder_mead(objective, mode, solutions, constraint, max_iterations, tol)
    final.iterations += sum(r.iterations for r in stage_results)
    final.evaluations += sum(r.evaluations for r in stage_results)
    return final


def _simplex_degenerate(points, rel_tol: float = 1e-9) -> bool:
    (x1, y1), (x2, y2), (x3, y3) = points
    area2 = abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
    scale = max(abs(x1) + abs(y1), abs(x2) + abs(y2), abs(x3) + abs(y3), 1e-12)
    return area2 <= rel_tol * scale * scale
