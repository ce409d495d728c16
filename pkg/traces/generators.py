"""
Synthetic harvest and traffic traces.

Solar days are a raised cosine between sunrise and sunset, scaled by a per-day
weather factor and per-hour multiplicative noise. Traffic tiles one of two
daily cluster templates chosen once per BS.
"""

from typing import Sequence, Union

import numpy as np

from traces.series import TimeSeries
from utils.errors import TraceError
from utils.models import ClusterProfiles, ConsumptionModel

SeedLike = Union[int, Sequence[int]]


def solar_day_shape(sunrise: int = 6, sunset: int = 18) -> np.ndarray:
    """24 hourly fractions of the daily peak, 1.0 at the midpoint and 0 outside daylight."""
    hours = np.arange(24, dtype=float)
    mid = 0.5 * (sunrise + sunset)
    half = 0.5 * (sunset - sunrise)
    shape = 0.5 * (1.0 + np.cos(np.pi * (hours - mid) / half))
    shape[(hours <= sunrise) | (hours >= sunset)] = 0.0
    return shape


def gen_solar_trace(days: int, peak_joules: float, noise_scale: float, seed: SeedLike,
                    sunrise: int = 6, sunset: int = 18) -> TimeSeries:
    """Hourly harvest in joules for `days` days.

    With noise_scale = 0 every day is the same bell peaking at `peak_joules` at noon.
    """
    if days < 1:
        raise TraceError("days must be >= 1")
    if peak_joules <= 0:
        raise TraceError("peak_joules must be positive")
    if noise_scale < 0:
        raise TraceError("noise_scale must be non-negative")
    if not 0 <= sunrise < sunset <= 24:
        raise TraceError("need 0 <= sunrise < sunset <= 24")

    rng = np.random.default_rng(seed)
    shape = np.tile(solar_day_shape(sunrise, sunset), days)
    # cloudy days dim the whole bell, hourly noise shakes individual hours
    day_factor = np.clip(1.0 - noise_scale * np.abs(rng.standard_normal(days)), 0.0, 1.0)
    hour_noise = np.clip(1.0 + 0.5 * noise_scale * rng.standard_normal(24 * days), 0.0, None)
    values = peak_joules * shape * np.repeat(day_factor, 24) * hour_noise
    return TimeSeries(values, kind="energy")


def gen_traffic_trace(days: int, profiles: ClusterProfiles, seed: SeedLike) -> tuple[TimeSeries, int]:
    """Pick cluster 2 with probability p, then tile its template over `days` days."""
    if days < 1:
        raise TraceError("days must be >= 1")
    rng = np.random.default_rng(seed)
    cluster_id = 2 if rng.random() < profiles.p else 1
    template = np.asarray(profiles.cluster2 if cluster_id == 2 else profiles.cluster1, dtype=float)
    values = np.tile(template, days)
    if profiles.jitter > 0:
        values = np.clip(values + profiles.jitter * rng.standard_normal(values.size), 0.0, 1.0)
    return TimeSeries(values, kind="load"), cluster_id


def consumption(load: TimeSeries, model: ConsumptionModel) -> TimeSeries:
    """Per-slot energy drain in joules through the linear power model."""
    if load.kind != "load":
        raise TraceError("consumption expects a load series")
    return TimeSeries(model.energy(load.values), load.start_slot, load.step, "energy")
