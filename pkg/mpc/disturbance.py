"""
Disturbance forecasts w = H - O over the control horizon.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gp.model import Forecast


@dataclass(frozen=True)
class DisturbanceForecast:
    """Means and variances of H_n(k) - O_n(k), shape (M, n_s), joules."""
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_2d(np.asarray(self.mean, dtype=float))
        var = np.atleast_2d(np.asarray(self.variance, dtype=float))
        if mean.ndim != 2 or mean.shape != var.shape:
            raise ValueError(f"mean {mean.shape} and variance {var.shape} must be equal-shaped (M, n_s)")
        if np.any(var < 0) or not np.all(np.isfinite(var)) or not np.all(np.isfinite(mean)):
            raise ValueError("variances must be finite and non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def horizon(self) -> int:
        return self.mean.shape[0]

    @property
    def n_bs(self) -> int:
        return self.mean.shape[1]

    @classmethod
    def stack(cls, columns: Sequence["DisturbanceForecast"]) -> "DisturbanceForecast":
        """Join single-BS forecasts side by side."""
        if not columns:
            raise ValueError("nothing to stack")
        return cls(np.hstack([c.mean for c in columns]), np.hstack([c.variance for c in columns]))

    @classmethod
    def deterministic(cls, mean) -> "DisturbanceForecast":
        mean = np.atleast_2d(np.asarray(mean, dtype=float))
        return cls(mean, np.zeros_like(mean))

    def with_inflow(self, inflow) -> "DisturbanceForecast":
        """Add a known inflow (M x n_s, joules) to the mean; variances are kept."""
        inflow = np.asarray(inflow, dtype=float)
        if inflow.shape != self.mean.shape:
            raise ValueError(f"inflow {inflow.shape} does not match disturbance {self.mean.shape}")
        return DisturbanceForecast(self.mean + inflow, self.variance)


def make_disturbance(h_forecast: Forecast, o_forecast: Forecast) -> DisturbanceForecast:
    """W = H - O for one BS; the two processes are taken as independent."""
    if h_forecast.horizon_slots != o_forecast.horizon_slots:
        raise ValueError(
            f"horizon mismatch: harvest {h_forecast.horizon_slots} vs consumption {o_forecast.horizon_slots}")
    mean = h_forecast.mean - o_forecast.mean
    var = h_forecast.variance + o_forecast.variance
    return DisturbanceForecast(mean[:, None], var[:, None])


def expected_refill(dist: DisturbanceForecast, state0, ongrid, b_up: float, b_max: float,
                    remaining, limit, slot0: int, slots_per_day: int) -> np.ndarray:
    """
    Grid purchases the ongrid BSs are expected to make over the horizon.

    Row k is the top-up towards b_up at the start of slot slot0 + k + 1, taken
    along the uncontrolled mean path from state0 and limited by the daily cap:
    `remaining` is what is left today, `limit` applies from the next day on.
    """
    z = np.asarray(state0, dtype=float).reshape(-1).copy()
    ongrid = np.asarray(ongrid, dtype=bool).reshape(-1)
    left = np.broadcast_to(np.asarray(remaining, dtype=float), z.shape).copy()
    limit = np.broadcast_to(np.asarray(limit, dtype=float), z.shape)
    if ongrid.shape != z.shape or dist.n_bs != len(z):
        raise ValueError(f"refill needs one ongrid flag and level per BS ({dist.n_bs})")

    out = np.zeros_like(dist.mean)
    for k in range(dist.horizon):
        z = np.clip(z + dist.mean[k], 0.0, b_max)
        if (slot0 + k + 1) % slots_per_day == 0:
            left[:] = limit
        buy = np.where(ongrid, np.minimum(np.maximum(0.0, b_up - z), left), 0.0)
        left -= buy
        z += buy
        out[k] = buy
    return out
