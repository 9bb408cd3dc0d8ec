"""Nelder-Mead engine, constraint handling, and parameter transforms."""

import numpy as np
import pytest

from delfbm import (
    DEFAULT_INIT_SIMPLEX,
    ParameterError,
    constrain_box,
    inverse_transform_params,
    nelder_mead,
    transform_params,
)


def quadratic(h, theta):
    return (h - 0.5) ** 2 + (theta - 30.0) ** 2


class TestNelderMead:
    @pytest.mark.parametrize("constraint", ["transform", "box", "none"])
    def test_quadratic_minimum(self, constraint):
        res = nelder_mead(quadratic, "minimize", constraint=constraint)
        assert res.converged
        assert abs(res.point[0] - 0.5) < 1e-3
        assert abs(res.point[1] - 30.0) < 1e-3 * 30.0

    def test_maximize_matches_minimize(self):
        res_min = nelder_mead(quadratic, "minimize")
        res_max = nelder_mead(lambda h, t: -quadratic(h, t), "maximize")
        assert res_max.point == pytest.approx(res_min.point, rel=1e-9)
        assert res_max.value == pytest.approx(-res_min.value, abs=1e-12)

    def test_valley_against_grid_search(self):
        # banana-shaped valley with its floor inside the feasible box
        def valley(h, theta):
            return 100.0 * (theta / 30.0 - (2.0 * h) ** 2) ** 2 + (1.0 - 2.0 * h) ** 2

        hs = np.linspace(0.3, 0.7, 401)
        ts = np.linspace(15.0, 60.0, 451)
        vals = valley(hs[:, None], ts[None, :])
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        res = nelder_mead(valley, "minimize", constraint="transform")
        assert abs(res.point[0] - hs[i]) < 1e-2
        assert abs(res.point[1] - ts[j]) / ts[j] < 1e-2

    def test_best_value_never_worsens(self):
        res = nelder_mead(quadratic, "minimize", constraint="none")
        trace = np.asarray(res.trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_initial_vertex_order_irrelevant(self):
        init = list(DEFAULT_INIT_SIMPLEX)
        results = [
            nelder_mead(quadratic, "minimize", init=perm)
            for perm in (init, init[::-1], [init[1], init[2], init[0]])
        ]
        for res in results[1:]:
            assert res.point == pytest.approx(results[0].point, abs=1e-12)

    def test_iteration_cap_flags_nonconvergence(self):
        res = nelder_mead(quadratic, "minimize", max_iterations=3)
        assert not res.converged
        assert res.iterations == 3

    def test_all_vertices_nonfinite_rejected(self):
        with pytest.raises(ParameterError):
            nelder_mead(lambda h, t: float("nan"), "minimize")

    def test_partial_nonfinite_is_tolerated(self):
        def holed(h, theta):
            return np.inf if theta > 29.0 else quadratic(h, theta)

        res = nelder_mead(holed, "minimize")
        assert res.point[1] <= 29.0

    def test_transform_iterates_stay_feasible(self):
        seen = []

        def spy(h, theta):
            seen.append((h, theta))
            return quadratic(h, theta)

        nelder_mead(spy, "minimize", constraint="transform")
        arr = np.asarray(seen)
        assert np.all((arr[:, 0] > 0.0) & (arr[:, 0] < 1.0))
        assert np.all(arr[:, 1] > 0.0)

    def test_near_zero_coordinates_guarded(self):
        # the relative stopping rule divides by the best vertex; floors
        # keep it defined when the optimum coordinate is at zero
        res = nelder_mead(
            lambda x, y: x * x + y * y, "minimize",
            init=((-0.1, -0.1), (0.15, -0.05), (0.02, 0.12)),
            constraint="none",
        )
        assert abs(res.point[0]) < 0.05 and abs(res.point[1]) < 0.05


class TestConstrainBox:
    def test_interior_unchanged(self):
        assert constrain_box((0.5, 30.0)) == (0.5, 30.0)

    def test_h_clamped(self):
        assert constrain_box((1.2, 30.0)) == (1.0 - 1e-4, 30.0)

    def test_both_clamped(self):
        assert constrain_box((-3.0, -5.0)) == (1e-4, 1e-4)


class TestTransform:
    def test_origin(self):
        assert transform_params(0.0, 0.0) == pytest.approx((0.5, 1.0))

    def test_round_trip(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            h = rng.uniform(1e-3, 1.0 - 1e-3)
            theta = np.exp(rng.uniform(-5, 8))
            x, y = inverse_transform_params(h, theta)
            h2, t2 = transform_params(x, y)
            assert h2 == pytest.approx(h, rel=1e-12, abs=1e-12)
            assert t2 == pytest.approx(theta, rel=1e-12)

    def test_h_monotone_toward_one(self):
        xs = np.linspace(-50, 50, 101)
        hs = [transform_params(x, 0.0)[0] for x in xs]
        assert np.all(np.diff(hs) > 0.0)
        assert hs[-1] < 1.0 and transform_params(1e12, 0.0)[0] < 1.0

    def test_inverse_domain_errors(self):
        with pytest.raises(ParameterError):
            inverse_transform_params(1.5, 1.0)
        with pytest.raises(ParameterError):
            inverse_transform_params(0.5, -1.0)
