"""
Strategy router.

Maps each Strategy to the policy that turns buffer levels into per-BS demands
and offers, and to the allocator that matches them:

- NOEE: no exchange at all
- CONV / HUNG: myopic B_ref - B rule, convex or Hungarian matching
- GPS_MPC_CONV / GPS_MPC_HUNG: GP forecasts feeding the horizon MPC
"""

import logging
from typing import Callable, Optional, Protocol

import numpy as np

from allocation import AllocationProblem, AllocationResult, solve_convex, solve_matching
from gp import Forecast, KernelExpr, OnlineForecaster, default_kernel, load_kernel, rmse
from mpc import DisturbanceForecast, RecedingHorizonController, expected_refill, make_disturbance
from sim.state import BsState, myopic_actions
from utils.models import ScenarioConfig, Strategy

logger = logging.getLogger(__name__)

# Random-sample starts per slot for the convex allocator inside a simulation.
SIM_ALLOCATION_SAMPLES = 1_000

Allocator = Callable[[AllocationProblem], AllocationResult]


class ActionPolicy(Protocol):
    def actions(self, t: int, buffers: np.ndarray) -> Optional[np.ndarray]: ...


class NoExchangePolicy:
    def actions(self, t: int, buffers: np.ndarray) -> Optional[np.ndarray]:
        return None


class MyopicPolicy:
    def __init__(self, b_ref: float):
        self.b_ref = b_ref

    def actions(self, t: int, buffers: np.ndarray) -> Optional[np.ndarray]:
        return myopic_actions(buffers, self.b_ref)


def _clip_mean(forecast: Forecast, lower: float, upper: float = np.inf) -> Forecast:
    return Forecast(np.clip(forecast.mean, lower, upper), forecast.covariance, forecast.inputs)


class PredictivePolicy:
    """
    Forecasts harvest and load for every BS over the horizon, maps load to
    consumption through the linear power model and solves the MPC.

    Harvest is modeled after dividing by its peak over the pre-training
    window; load is modeled as is.
    """

    def __init__(self, cfg: ScenarioConfig, states: list[BsState], kernel: Optional[KernelExpr] = None):
        self.cfg = cfg
        self.states = states
        self.controller = RecedingHorizonController(cfg.mpc_config(), self.disturbance)
        self.kernel = kernel or default_kernel(float(cfg.slots_per_day))
        gp = cfg.gp
        self.harvest_models = [OnlineForecaster(self.kernel, gp.refit_period, gp.grid, gp.noise_std)
                               for _ in states]
        self.load_models = [OnlineForecaster(self.kernel, gp.refit_period, gp.grid, gp.noise_std)
                            for _ in states]
        self.harvest_scale = np.ones(len(states))
        self.last_rmse: tuple[Optional[float], Optional[float]] = (None, None)

    def pretrain(self, t0: int):
        """Fit hyperparameters on the window that ends right before slot t0."""
        window = self.cfg.gp.window
        x = np.arange(t0 - window, t0, dtype=float)
        for n, bs in enumerate(self.states):
            h = bs.harvest.values[t0 - window:t0]
            peak = float(h.max())
            self.harvest_scale[n] = peak if peak > 0 else 1.0
            self.harvest_models[n].pretrain(x, h / self.harvest_scale[n])
            self.load_models[n].pretrain(x, bs.load.values[t0 - window:t0])
        logger.debug("pre-trained %d forecasters on slots [%d, %d)", 2 * len(self.states), t0 - window, t0)

    def disturbance(self, t: int, buffers: Optional[np.ndarray] = None) -> DisturbanceForecast:
        """H - O over the horizon; with `buffers`, plus the top-ups the ongrid BSs are expected to buy."""
        window, horizon = self.cfg.gp.window, self.cfg.horizon
        model = self.cfg.consumption
        x_train = np.arange(t - window, t, dtype=float)
        x_test = np.arange(t, t + horizon, dtype=float)
        columns, errors_h, errors_l = [], [], []
        for n, bs in enumerate(self.states):
            scale = self.harvest_scale[n]
            h_norm = self.harvest_models[n].forecast(x_train, bs.harvest.values[t - window:t] / scale, x_test)
            load = _clip_mean(self.load_models[n].forecast(x_train, bs.load.values[t - window:t], x_test), 0.0, 1.0)
            errors_h.append(h_norm.mean[0] - bs.harvest.values[t] / scale)
            errors_l.append(load.mean[0] - bs.load.values[t])
            harvest = _clip_mean(h_norm.affine(scale), 0.0)
            drain = load.affine(model.load_slope * model.slot_seconds, model.base_power * model.slot_seconds)
            columns.append(make_disturbance(harvest, drain))
        self.last_rmse = (rmse(errors_h, np.zeros(len(errors_h))), rmse(errors_l, np.zeros(len(errors_l))))
        dist = DisturbanceForecast.stack(columns)
        if buffers is None or not self.cfg.model_refill:
            return dist
        thresholds = self.cfg.thresholds
        refill = expected_refill(
            dist, buffers, [bs.ongrid for bs in self.states], thresholds.b_up, thresholds.b_max,
            remaining=[bs.cap.remaining for bs in self.states], limit=[bs.cap.limit for bs in self.states],
            slot0=t, slots_per_day=self.cfg.slots_per_day)
        return dist.with_inflow(refill)

    def actions(self, t: int, buffers: np.ndarray) -> Optional[np.ndarray]:
        return self.controller.step(buffers, slot=t)


def _convex(problem: AllocationProblem) -> AllocationResult:
    return solve_convex(problem, samples=SIM_ALLOCATION_SAMPLES)


ALLOCATORS: dict[str, Allocator] = {
    "convex": _convex,
    "hungarian": solve_matching,
}


def route_strategy(cfg: ScenarioConfig, states: list[BsState]) -> tuple[ActionPolicy, Optional[Allocator]]:
    """Pick the action policy and allocator for cfg.strategy."""
    strategy = cfg.strategy
    if strategy is Strategy.NOEE:
        return NoExchangePolicy(), None
    allocator = ALLOCATORS[strategy.allocator]
    if strategy.uses_forecasts:
        kernel = load_kernel(cfg.gp.kernel_path) if cfg.gp.kernel_path else None
        return PredictivePolicy(cfg, states, kernel), allocator
    return MyopicPolicy(cfg.thresholds.b_ref), allocator
