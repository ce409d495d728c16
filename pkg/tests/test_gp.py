import math

import numpy as np
import pytest
from scipy import stats

from gp import (
    GpModel, Hyper, OnlineForecaster, ProductKernel, SPKernel, SumKernel, base_kernels, default_kernel, dump_kernel,
    fit, gram, kernel_eval, kernel_matrix, log_marginal_likelihood, mean_rmse, parse_kernel, predict, rmse,
    rolling_forecast, rq_kernel, se_kernel, sp_kernel, trainable,
)
from traces import TimeSeries
from utils.errors import ConfigError, KernelError


def frozen_periodic(period: float = 24.0) -> SPKernel:
    return SPKernel(
        sigma=Hyper(value=1.0, trainable=False),
        period=Hyper(value=period, trainable=False),
        lengthscale=Hyper(value=1.0, trainable=False),
    )


def random_kernel(rng):
    """SE, RQ, SP, or a sum or product of two of them, with random hyperparameters."""
    def base():
        sigma, ell = rng.uniform(0.5, 2.0), rng.uniform(0.5, 5.0)
        pick = rng.integers(3)
        if pick == 0:
            return se_kernel(sigma, ell)
        if pick == 1:
            return rq_kernel(sigma, rng.uniform(0.5, 3.0), ell)
        return sp_kernel(sigma, rng.uniform(2.0, 10.0), ell)

    shape = rng.integers(4)
    if shape == 2:
        return SumKernel(terms=[base(), base()])
    if shape == 3:
        return ProductKernel(factors=[base(), base()])
    return base()


def modulated_daily(days: int, noise: float, cycle_days: float, seed: int) -> np.ndarray:
    """Daily bell whose amplitude drifts slowly, plus white noise."""
    t = np.arange(24 * days, dtype=float)
    amplitude = 1.0 + 0.4 * np.sin(2 * np.pi * t / (24.0 * cycle_days))
    bell = 0.5 * (1.0 - np.cos(2 * np.pi * t / 24.0))
    return 0.6 * amplitude * bell + np.random.default_rng(seed).normal(scale=noise, size=len(t))


class TestKernels:
    def test_se_at_zero_distance(self):
        assert kernel_eval(se_kernel(1.0, 3.0), 5.0, 5.0) == pytest.approx(1.0)

    def test_rq_half_point(self):
        assert kernel_eval(rq_kernel(1.0, 1.0, 1.0), 0.0, math.sqrt(2.0)) == pytest.approx(0.5)

    @pytest.mark.parametrize("shift", [24.0, 48.0, 240.0])
    def test_periodic_repeats(self, shift):
        k = sp_kernel(sigma=1.0, period=24.0, lengthscale=0.7)
        assert kernel_eval(k, 3.0, 3.0 + shift) == pytest.approx(1.0)

    def test_product_multiplies(self):
        k = default_kernel()
        d = np.array([0.0, 5.0, 13.0])
        rq, sp = k.factors
        np.testing.assert_allclose(k.evaluate(d), rq.evaluate(d) * sp.evaluate(d))

    def test_period_is_frozen_by_default(self):
        assert all(h.value != 24.0 for h in trainable(default_kernel()))
        assert len(trainable(default_kernel())) == 3

    def test_gram_single_point(self):
        K = gram(se_kernel(2.0, 1.0), np.array([3.0]), noise_std=0.1)
        assert K.shape == (1, 1)
        assert K[0, 0] == pytest.approx(4.0 + 0.01)

    def test_gram_symmetric_and_psd(self, rng):
        xs = np.sort(rng.random(50) * 100)
        for k in (se_kernel(1.3, 4.0), rq_kernel(0.8, 2.0, 7.0), default_kernel()):
            K = gram(k, xs, 1e-5)
            np.testing.assert_array_equal(K, K.T)
            assert np.linalg.eigvalsh(K).min() >= -1e-8

    @pytest.mark.parametrize("k", [
        se_kernel(1e200, 1.0),
        rq_kernel(1e200, 1.0, 1.0),
        SPKernel(sigma=Hyper(value=1e200), lengthscale=Hyper(value=1.0)),
        ProductKernel(factors=[se_kernel(1e200, 1.0), sp_kernel(1e200)]),
    ])
    def test_huge_amplitude_is_a_kernel_error(self, k):
        with pytest.raises(KernelError):
            kernel_matrix(k, np.array([0.0, 1.0]), np.array([0.0]))
        with pytest.raises(KernelError):
            kernel_eval(k, 0.0, 0.0)

    def test_json_round_trip(self):
        k = default_kernel()
        assert parse_kernel(dump_kernel(k)) == k

    def test_bad_json_names_field(self):
        with pytest.raises(ConfigError) as info:
            parse_kernel('{"kind": "se", "lengthscale": {"value": -1}}')
        assert "lengthscale" in info.value.field

    def test_base_kernels_share_unit_amplitude(self):
        kernels = base_kernels()
        assert set(kernels) == {"SE", "RQ", "SP", "RQxSP"}
        for k in kernels.values():
            assert kernel_eval(k, 3.0, 3.0) == pytest.approx(1.0)
        assert kernels["RQxSP"] == default_kernel()


class TestLikelihood:
    def test_single_point(self):
        sigma, noise, r = 1.5, 0.1, 0.7
        v = sigma ** 2 + noise ** 2
        model = GpModel(se_kernel(sigma, 1.0), [0.0], [r], noise_std=noise)
        expected = -0.5 * (math.log(2 * math.pi * v) + r * r / v)
        assert log_marginal_likelihood(model) == pytest.approx(expected, abs=1e-12)

    def test_dense_oracle(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 9))
            xs = np.sort(rng.random(n) * 10)
            ys = rng.normal(size=n)
            k = random_kernel(rng)
            model = GpModel(k, xs, ys, noise_std=0.1)
            oracle = stats.multivariate_normal(mean=np.zeros(n), cov=gram(k, xs, 0.1)).logpdf(ys)
            assert log_marginal_likelihood(model) == pytest.approx(oracle, abs=1e-8)

    def test_rejects_unsorted_inputs(self):
        with pytest.raises(ValueError):
            GpModel(se_kernel(), [1.0, 0.0], [0.0, 0.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            GpModel(se_kernel(), [0.0, 1.0], [0.0])


class TestPredict:
    def test_interpolates_training_points(self):
        xs = np.array([0.0, 3.0, 6.0])
        ys = np.array([0.5, -1.0, 2.0])
        out = predict(GpModel(se_kernel(1.0, 1.0), xs, ys, noise_std=1e-12), xs)
        np.testing.assert_allclose(out.mean, ys, atol=1e-6)
        assert np.all(out.variance <= 1e-6)

    def test_reverts_to_prior_far_away(self):
        xs = np.arange(5.0)
        out = predict(GpModel(se_kernel(1.0, 1.0), xs, np.ones(5), noise_std=0.01), [100.0])
        assert out.mean[0] == pytest.approx(0.0, abs=1e-9)
        assert out.variance[0] == pytest.approx(1.0, abs=1e-9)

    def test_dense_oracle(self, rng):
        for _ in range(200):
            n, n_test = int(rng.integers(1, 9)), int(rng.integers(1, 5))
            xs = np.sort(rng.random(n) * 10)
            ys = rng.normal(size=n)
            test = rng.random(n_test) * 14 - 2
            k = random_kernel(rng)
            out = predict(GpModel(k, xs, ys, noise_std=0.1), test)
            K_inv = np.linalg.inv(gram(k, xs, 0.1))
            Ks = kernel_matrix(k, xs, test)
            np.testing.assert_allclose(out.mean, Ks.T @ K_inv @ ys, atol=1e-8)
            expected = kernel_matrix(k, test, test) - Ks.T @ K_inv @ Ks
            np.testing.assert_allclose(out.covariance, expected, atol=1e-8)

    def test_variance_below_prior(self, rng):
        xs = np.sort(rng.random(30) * 50)
        k = se_kernel(1.5, 3.0)
        out = predict(GpModel(k, xs, rng.normal(size=30), noise_std=0.05), np.linspace(-10, 60, 40))
        assert np.all(out.variance <= 1.5 ** 2 + 1e-12)

    def test_more_data_never_adds_variance(self):
        k = se_kernel(1.0, 2.0)
        test = np.linspace(0, 10, 21)
        few = predict(GpModel(k, [0.0, 5.0], [1.0, 0.0], 0.05), test)
        more = predict(GpModel(k, [0.0, 5.0, 10.0], [1.0, 0.0, 0.3], 0.05), test)
        assert np.all(more.variance <= few.variance + 1e-12)

    def test_affine(self):
        out = predict(GpModel(se_kernel(), [0.0, 1.0], [0.2, 0.4], 0.01), [2.0])
        scaled = out.affine(10.0, 1.0)
        assert scaled.mean[0] == pytest.approx(out.mean[0] * 10 + 1)
        assert scaled.variance[0] == pytest.approx(out.variance[0] * 100)


class TestFit:
    @pytest.fixture
    def se_sample(self):
        xs = np.arange(60.0)
        K = gram(se_kernel(1.0, 5.0), xs, 1e-3)
        ys = np.linalg.cholesky(K) @ np.random.default_rng(0).normal(size=60)
        return xs, ys

    def test_grid_recovers_lengthscale(self, se_sample):
        xs, ys = se_sample
        model = GpModel(se_kernel(1.0, 1.0, train_sigma=False), xs, ys, noise_std=1e-3)
        fitted = fit(model, grid=[1.0, 5.0, 25.0], refine=False)
        assert fitted.kernel.lengthscale.value == pytest.approx(5.0)
        assert fitted.kernel.sigma.value == 1.0

    def test_refinement_never_worse_than_seed(self, se_sample):
        xs, ys = se_sample
        model = GpModel(se_kernel(1.0, 2.0, train_sigma=False), xs, ys, noise_std=1e-3)
        fitted = fit(model, grid=None)
        assert log_marginal_likelihood(fitted) >= log_marginal_likelihood(model) - 1e-9

    def test_deterministic(self, se_sample):
        xs, ys = se_sample
        model = GpModel(rq_kernel(1.0, 1.0, 1.0, train_sigma=False), xs, ys, noise_std=1e-3)
        a = fit(model, grid=[0.1, 1.0, 10.0])
        b = fit(model, grid=[0.1, 1.0, 10.0])
        assert a.kernel == b.kernel

    def test_no_trainables_returns_model(self):
        model = GpModel(frozen_periodic(), [0.0, 1.0], [0.1, 0.2])
        assert fit(model, grid=[1.0, 10.0]) is model

    def test_composite_beats_its_periodic_factor(self):
        ys = modulated_daily(days=6, noise=0.05, cycle_days=3.0, seed=3)
        xs = np.arange(len(ys), dtype=float)
        grid = [0.1, 1.0, 10.0]
        periodic = fit(GpModel(base_kernels()["SP"], xs, ys, noise_std=0.05), grid)
        composite = fit(GpModel(default_kernel(), xs, ys, noise_std=0.05), grid)
        assert log_marginal_likelihood(composite) > log_marginal_likelihood(periodic)


class TestForecasting:
    def test_rmse_examples(self):
        assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
        assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))
        with pytest.raises(ValueError):
            rmse([1.0], [1.0, 2.0])

    def test_forecaster_needs_pretraining(self):
        with pytest.raises(RuntimeError):
            OnlineForecaster(se_kernel()).forecast(np.arange(3.0), np.zeros(3), np.array([3.0]))

    def test_series_too_short(self):
        with pytest.raises(ValueError):
            rolling_forecast(TimeSeries(np.ones(30)), frozen_periodic(), window=24, horizon=6)

    def test_constant_series(self):
        series = TimeSeries(np.full(60, 0.5))
        steps = rolling_forecast(series, frozen_periodic(), window=48, horizon=6)
        assert len(steps) == 60 - 54
        for step in steps:
            np.testing.assert_allclose(step.forecast.mean, 0.5, atol=1e-4)
        assert mean_rmse(steps) <= 1e-4

    def test_sinusoid_benchmark(self):
        t = np.arange(336 + 24 + 10)
        series = TimeSeries(0.5 + 0.5 * np.sin(2 * np.pi * t / 24.0))
        steps = rolling_forecast(series, default_kernel(), window=336, horizon=24, refit_period=None)
        assert len(steps) == 10
        assert mean_rmse(steps) <= 0.02


@pytest.mark.slow
def test_quasi_periodic_kernel_forecasts_best():
    # 30 days of rolling 24-step forecasts after a 14-day window
    series = TimeSeries(modulated_daily(days=45, noise=0.05, cycle_days=20.0, seed=11))
    scores = {
        name: mean_rmse(rolling_forecast(series, k, window=336, horizon=24, refit_period=None, noise_std=0.05))
        for name, k in base_kernels().items()
    }
    assert all(scores["RQxSP"] < v for name, v in scores.items() if name != "RQxSP"), scores
