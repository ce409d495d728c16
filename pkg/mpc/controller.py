"""
Receding-horizon loop: observe buffers, solve the horizon QP, execute row 0 only.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from mpc.disturbance import DisturbanceForecast
from mpc.qp import ControlPlan, build_horizon_qp, solve_horizon
from utils.models import MpcConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HorizonState:
    """Mean buffer levels and their variances; row 0 is the measured state.

    Both arrays have shape (M + 1, n_s).
    """
    mean: np.ndarray
    variance: np.ndarray
    slot0: int = 0


def reconstruct_states(state0, u, dist: DisturbanceForecast, slot0: int = 0) -> HorizonState:
    """Roll the mean dynamics forward from state0 under controls u (joules)."""
    z0 = np.asarray(state0, dtype=float).reshape(1, -1)
    u = np.asarray(u, dtype=float)
    if u.shape != dist.mean.shape:
        raise ValueError(f"controls {u.shape} do not match disturbance {dist.mean.shape}")
    mean = np.vstack([z0, z0 + np.cumsum(u + dist.mean, axis=0)])
    variance = np.vstack([np.zeros_like(z0), np.cumsum(dist.variance, axis=0)])
    return HorizonState(mean, variance, slot0)


def mpc_step(state0, dist: DisturbanceForecast, cfg: MpcConfig) -> np.ndarray:
    """Per-BS amounts for the current slot: > 0 demand, < 0 offer (joules)."""
    return solve_horizon(build_horizon_qp(state0, dist, cfg)).first_action


DisturbanceSource = Callable[[int, np.ndarray], DisturbanceForecast]


class RecedingHorizonController:
    """
    Runs the four control steps each slot:
    observe the buffers, solve over the horizon, release the first row, then
    move on so the next call sees fresh forecasts.
    """

    def __init__(self, cfg: MpcConfig, disturbances: DisturbanceSource):
        self.cfg = cfg
        self.disturbances = disturbances
        self.last_plan: Optional[ControlPlan] = None
        self.slot = 0

    def step(self, buffers, slot: Optional[int] = None) -> np.ndarray:
        """Plan from `buffers` and return the first row; `slot` re-synchronizes the counter."""
        if slot is not None:
            self.slot = slot
        observed = np.asarray(buffers, dtype=float)
        dist = self.disturbances(self.slot, observed)
        plan = solve_horizon(build_horizon_qp(observed, dist, self.cfg))
        self.last_plan = plan
        if plan.softened:
            logger.debug("slot %d: softened bounds for BSs %s", self.slot, sorted(plan.softened))
        self.slot += 1
        return plan.first_action
