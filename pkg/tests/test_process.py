"""Covariance formulas, exact simulation, and series serialization."""

import numpy as np
import pytest

from delfbm import (
    GridError,
    ModelParams,
    ParameterError,
    SeriesFormatError,
    TimeGrid,
    TimeSeries,
    add_white_noise,
    build_covariance_matrix,
    delamperti_covariance,
    fbm_covariance,
    read_series_csv,
    replication_rng,
    sample_path,
    write_series_csv,
)
from delfbm.aam import raw_increment_loglog
from delfbm.process import cholesky_with_jitter


def grid(n, step=0.001, start=None):
    t0 = step if start is None else start
    return TimeGrid(t0 + step * np.arange(n))


class TestModelParams:
    def test_valid(self):
        p = ModelParams(H=0.65, theta=30.0, sigma=2.0, mu=-1.0)
        assert p.H == 0.65

    @pytest.mark.parametrize("kwargs", [
        dict(H=0.0, theta=1.0),
        dict(H=1.0, theta=1.0),
        dict(H=-0.2, theta=1.0),
        dict(H=0.5, theta=0.0),
        dict(H=0.5, theta=-3.0),
        dict(H=0.5, theta=1.0, sigma=0.0),
    ])
    def test_domain_errors(self, kwargs):
        with pytest.raises(ParameterError):
            ModelParams(**kwargs)


class TestFbmCovariance:
    def test_variance_at_one(self):
        assert fbm_covariance(1.0, 1.0, H=0.5, sigma=1.0) == pytest.approx(1.0)

    def test_zero_time_pins_covariance(self):
        assert fbm_covariance(0.0, 5.0, H=0.7, sigma=2.0) == 0.0

    def test_high_precision_reference(self):
        # 0.5*(2^1.3 + 1 - 1) evaluated with 30-digit arithmetic
        assert fbm_covariance(1.0, 2.0, H=0.65, sigma=1.0) == pytest.approx(
            1.2311444133449163, rel=1e-14
        )

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            fbm_covariance(1.0, 2.0, H=1.2, sigma=1.0)
        with pytest.raises(ParameterError):
            fbm_covariance(1.0, 2.0, H=0.5, sigma=-1.0)


class TestDelampertiCovariance:
    def test_unit_at_zero_lag(self):
        for H, theta in [(0.2, 1.0), (0.5, 30.0), (0.9, 500.0)]:
            assert delamperti_covariance(0.0, H, theta) == pytest.approx(1.0)

    def test_even_in_lag(self):
        for dt in (0.01, 0.3, 2.0):
            assert delamperti_covariance(dt, 0.65, 30.0) == pytest.approx(
                delamperti_covariance(-dt, 0.65, 30.0), rel=1e-14
            )

    def test_monte_carlo_oracle(self):
        # covariance at lag 0.1 vs sample covariance of simulated pairs
        H, theta, lag, reps = 0.65, 30.0, 0.1, 20_000
        pair = TimeGrid(np.array([0.5, 0.5 + lag]))
        cov = build_covariance_matrix(pair, ModelParams(H=H, theta=theta), "delampertized")
        L, _ = cholesky_with_jitter(cov)
        draws = L @ np.random.default_rng(123).standard_normal((2, reps))
        sample_cov = np.mean(draws[0] * draws[1])
        c = delamperti_covariance(lag, H, theta)
        se = np.sqrt((1.0 + c**2) / reps)
        assert abs(sample_cov - c) < 3 * se

    def test_stationarity_under_time_shift(self):
        g1 = grid(8, step=0.004)
        g2 = TimeGrid(g1.times + 17.3)
        p = ModelParams(H=0.35, theta=12.0)
        m1 = build_covariance_matrix(g1, p, "delampertized")
        m2 = build_covariance_matrix(g2, p, "delampertized")
        np.testing.assert_allclose(m1, m2, atol=1e-12)


class TestCovarianceMatrix:
    def test_singleton_delampertized(self):
        m = build_covariance_matrix(TimeGrid(np.array([0.3])), ModelParams(0.5, 5.0), "delampertized")
        np.testing.assert_allclose(m, [[1.0]])

    def test_long_lag_decorrelates(self):
        g = TimeGrid(np.array([0.0, 50.0]))
        m = build_covariance_matrix(g, ModelParams(0.65, 30.0), "delampertized")
        assert abs(m[0, 1]) < 1e-10

    def test_cholesky_without_jitter(self):
        g = grid(5)
        m = build_covariance_matrix(g, ModelParams(0.65, 30.0), "delampertized")
        L, jitter = cholesky_with_jitter(m)
        assert jitter == 0.0
        # independent check through the eigenvalue routine
        assert np.linalg.eigvalsh(m).min() > 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_symmetry_unit_diagonal_psd(self, seed):
        rng = np.random.default_rng(seed)
        times = np.cumsum(rng.uniform(1e-4, 5e-3, size=rng.integers(2, 12)))
        H = rng.uniform(0.05, 0.95)
        theta = rng.uniform(0.5, 80.0)
        m = build_covariance_matrix(TimeGrid(times), ModelParams(H, theta), "delampertized")
        np.testing.assert_allclose(m, m.T, atol=1e-14)
        np.testing.assert_allclose(np.diag(m), 1.0, atol=1e-14)
        assert np.linalg.eigvalsh(m).min() > -1e-10

    def test_fbm_zero_time_row(self):
        g = TimeGrid(np.array([0.0, 0.5, 1.0]))
        m = build_covariance_matrix(g, ModelParams(0.7, 1.0), "fbm")
        assert np.all(m[0] == 0.0) and np.all(m[:, 0] == 0.0)

    def test_invalid_grid(self):
        with pytest.raises(GridError):
            TimeGrid(np.array([0.2, 0.1]))


class TestSamplePath:
    def test_deterministic_under_seed(self):
        g = grid(50)
        p = ModelParams(0.65, 30.0)
        a = sample_path(g, p, "delampertized", 42)
        b = sample_path(g, p, "delampertized", 42)
        np.testing.assert_array_equal(a.values, b.values)

    def test_distinct_seeds_distinct_paths(self):
        g = grid(50)
        p = ModelParams(0.65, 30.0)
        a = sample_path(g, p, "delampertized", 1)
        b = sample_path(g, p, "delampertized", 2)
        assert not np.array_equal(a.values, b.values)

    def test_sample_mean_matches_mu(self):
        g = TimeGrid(np.array([0.05]))
        p = ModelParams(0.5, 10.0, sigma=1.0, mu=2.5)
        reps = 10_000
        vals = np.array([
            sample_path(g, p, "delampertized", replication_rng(7, r)).values[0]
            for r in range(reps)
        ])
        assert abs(vals.mean() - 2.5) < 3.0 * 1.0 / np.sqrt(reps)

    def test_sample_covariance_matches_model(self):
        g = grid(4, step=0.02)
        sigma = 1.7
        p = ModelParams(0.65, 30.0, sigma=sigma)
        target = sigma**2 * build_covariance_matrix(g, p, "delampertized")
        L, _ = cholesky_with_jitter(target / sigma**2)
        reps = 20_000
        draws = sigma * (L @ np.random.default_rng(5).standard_normal((4, reps)))
        sample_cov = draws @ draws.T / reps
        se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target**2) / reps)
        assert np.all(np.abs(sample_cov - target) < 3 * se)

    def test_fbm_variance_scaling(self):
        # Var(X_t) = sigma^2 t^{2H} for exact fBm simulation
        H, sigma, reps = 0.7, 1.3, 8000
        g = TimeGrid(np.array([0.3, 0.8, 1.5]))
        p = ModelParams(H, theta=1.0, sigma=sigma)
        draws = np.array([
            sample_path(g, p, "fbm", replication_rng(11, r)).values for r in range(reps)
        ])
        for j, t in enumerate(g.times):
            target = sigma**2 * t ** (2 * H)
            se = target * np.sqrt(2.0 / reps)
            assert abs(np.var(draws[:, j]) - target) < 3 * se

    def test_stationary_increment_variance_across_windows(self):
        # increments of the stationary process at a fixed lag have one
        # variance no matter where the window sits
        H, theta, lag = 0.65, 30.0, 0.01
        target = 2.0 * (1.0 - delamperti_covariance(lag, H, theta))
        reps = 6000
        for start in (0.01, 0.4, 2.0):
            pair = TimeGrid(np.array([start, start + lag]))
            cov = build_covariance_matrix(pair, ModelParams(H, theta), "delampertized")
            L, _ = cholesky_with_jitter(cov)
            draws = L @ np.random.default_rng(int(start * 1000)).standard_normal((2, reps))
            var = np.var(draws[1] - draws[0])
            se = target * np.sqrt(2.0 / reps)
            assert abs(var - target) < 3 * se


class TestWhiteNoise:
    def test_zero_noise_is_identity(self):
        g = grid(10)
        s = sample_path(g, ModelParams(0.5, 30.0), "delampertized", 3)
        assert add_white_noise(s, 0.0, 4) is s

    def test_noise_variance(self):
        g = grid(10_000)
        s = TimeSeries(g, np.zeros(len(g)))
        noisy = add_white_noise(s, 0.4, 9)
        assert np.var(noisy.values - s.values) == pytest.approx(0.16, rel=0.05)

    def test_negative_sd_rejected(self):
        g = grid(5)
        s = TimeSeries(g, np.zeros(5))
        with pytest.raises(ParameterError):
            add_white_noise(s, -0.1, 0)

    def test_two_plateau_loglog_shape(self):
        # additive noise flattens the small-scale end of the log-log plot
        g = grid(400)
        s = sample_path(g, ModelParams(0.5, 30.0), "delampertized", 21)
        noisy = add_white_noise(s, 0.4, 22)
        plot = raw_increment_loglog(noisy, n_lags=24)
        x, y = plot.log_scales, plot.log_moments
        third = x.size // 3
        slope = lambda a, b: np.polyfit(x[a:b], y[a:b], 1)[0]
        assert slope(0, third) < slope(third, 2 * third)


class TestSeriesCsv:
    def test_round_trip(self, tmp_path):
        g = grid(7)
        s = sample_path(g, ModelParams(0.3, 8.0), "delampertized", 17)
        path = tmp_path / "series.csv"
        write_series_csv(s, path)
        back = read_series_csv(path)
        np.testing.assert_array_equal(back.times, s.times)
        np.testing.assert_array_equal(back.values, s.values)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(SeriesFormatError):
            read_series_csv(path)

    def test_bad_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,value\n0.001,1.0\n0.002,oops\n")
        with pytest.raises(SeriesFormatError) as err:
            read_series_csv(path)
        assert err.value.line == 3


class TestReplicationStreams:
    def test_reproducible_per_index(self):
        a = replication_rng(100, 3).standard_normal(4)
        b = replication_rng(100, 3).standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_independent_across_indices(self):
        a = replication_rng(100, 3).standard_normal(4)
        b = replication_rng(100, 4).standard_normal(4)
        assert not np.array_equal(a, b)
