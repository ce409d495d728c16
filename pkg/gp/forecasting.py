"""
Online multi-step forecasting over a sliding training window.

The routine pre-trains hyperparameters on the first W points, then at each step
trains on the latest N points (refitting every S steps, starting from the
pre-trained values) and predicts the next N* points.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from gp.kernels import KernelExpr
from gp.model import DEFAULT_NOISE_STD, Forecast, GpModel, fit, predict
from traces.series import TimeSeries
from utils.errors import ForecastError, PpgError

logger = logging.getLogger(__name__)

DEFAULT_GRID = (1e-2, 1e-1, 1.0, 1e1, 1e2)


def rmse(predicted, actual) -> float:
    predicted = np.asarray(predicted, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if predicted.size != actual.size:
        raise ValueError(f"length mismatch: {predicted.size} predicted vs {actual.size} actual")
    if predicted.size == 0:
        raise ValueError("rmse needs at least one value")
    return float(np.sqrt(np.mean((predicted - actual) ** 2)))


class OnlineForecaster:
    """Keeps the pre-trained kernel and the refit schedule for one series."""

    def __init__(self, kernel: KernelExpr, refit_period: Optional[int] = None,
                 grid: Sequence[float] = DEFAULT_GRID, noise_std: float = DEFAULT_NOISE_STD):
        if refit_period is not None and refit_period < 1:
            raise ValueError("refit_period must be >= 1")
        self.initial_kernel = kernel
        self.pretrained: Optional[KernelExpr] = None
        self.kernel: Optional[KernelExpr] = None
        self.refit_period = refit_period
        self.grid = tuple(grid)
        self.noise_std = noise_std
        self.steps = 0

    def pretrain(self, inputs: np.ndarray, targets: np.ndarray) -> KernelExpr:
        model = fit(GpModel(self.initial_kernel, inputs, targets, self.noise_std), self.grid)
        self.pretrained = self.kernel = model.kernel
        self.steps = 0
        return self.kernel

    def forecast(self, inputs: np.ndarray, targets: np.ndarray, test_inputs: np.ndarray) -> Forecast:
        """Train on (inputs, targets) and predict at test_inputs; advances the step counter."""
        if self.pretrained is None:
            raise RuntimeError("pretrain() must run before forecast()")
        model = GpModel(self.kernel, inputs, targets, self.noise_std)
        if self.refit_period is not None and self.steps % self.refit_period == 0:
            model = fit(model.with_kernel(self.pretrained), grid=None)
            self.kernel = model.kernel
        self.steps += 1
        return predict(model, test_inputs)


@dataclass(frozen=True)
class ForecastStep:
    t: int
    forecast: Forecast
    truth: np.ndarray
    rmse: float


def rolling_forecast(series: TimeSeries, kernel: KernelExpr, window: int, horizon: int,
                     refit_period: Optional[int] = 1, pretrain_window: Optional[int] = None,
                     grid: Sequence[float] = DEFAULT_GRID,
                     noise_std: float = DEFAULT_NOISE_STD) -> list[ForecastStep]:
    """Slide a `window`-point training set over the series, forecasting `horizon` points each step.

    refit_period=None keeps the pre-trained hyperparameters for the whole run.
    """
    values = series.values
    T = len(values)
    if window < 1 or horizon < 1:
        raise ValueError("window and horizon must be positive")
    if T < window + horizon + 1:
        raise ValueError(f"series of length {T} is shorter than window + horizon + 1 = {window + horizon + 1}")
    pretrain_window = pretrain_window or window
    x = series.slots().astype(float) * series.step

    forecaster = OnlineForecaster(kernel, refit_period, grid, noise_std)
    try:
        forecaster.pretrain(x[:pretrain_window], values[:pretrain_window])
    except PpgError as e:
        raise ForecastError(f"pre-training failed: {e}", slot=0) from e

    steps: list[ForecastStep] = []
    for t in range(1, T - (window + horizon) + 1):
        lo, mid, hi = t - 1, t - 1 + window, t - 1 + window + horizon
        try:
            forecast = forecaster.forecast(x[lo:mid], values[lo:mid], x[mid:hi])
        except PpgError as e:
            raise ForecastError(str(e), slot=t) from e
        truth = values[mid:hi]
        steps.append(ForecastStep(t, forecast, truth, rmse(forecast.mean, truth)))
    logger.debug("rolling forecast: %d steps, mean rmse %.4g", len(steps), mean_rmse(steps))
    return steps


def mean_rmse(steps: Sequence[ForecastStep]) -> float:
    return float(np.mean([s.rmse for s in steps])) if steps else float("nan")
