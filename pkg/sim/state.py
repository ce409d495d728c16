"""
Per-BS state and the slot-level rules: buffer update, grid purchases,
myopic demand/offer and outage.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from traces.series import TimeSeries


@dataclass
class PurchaseCap:
    """Running grid purchases within the current day against a daily limit (joules)."""
    limit: float = math.inf
    used: float = 0.0

    @property
    def remaining(self) -> float:
        return max(0.0, self.limit - self.used)

    def reset(self):
        self.used = 0.0


@dataclass
class BsState:
    id: int
    ongrid: bool
    buffer: float
    cluster_id: int
    harvest: TimeSeries
    load: TimeSeries
    consumption: TimeSeries
    cap: PurchaseCap = field(default_factory=PurchaseCap)
    purchased: list[float] = field(default_factory=list)

    @property
    def total_purchased(self) -> float:
        return float(sum(self.purchased))


@dataclass(frozen=True)
class BufferUpdate:
    """New level plus what the clamp to [0, b_max] removed or could not cover."""
    level: float
    wasted: float
    unserved: float

    @property
    def depleted(self) -> bool:
        return self.level <= 0.0


def buffer_update(buffer: float, harvest: float, consumption: float, transfer: float,
                  purchased: float, b_max: float) -> BufferUpdate:
    """B' = clamp(B + H - O + T + theta, 0, b_max)."""
    raw = buffer + harvest - consumption + transfer + purchased
    if raw > b_max:
        return BufferUpdate(b_max, raw - b_max, 0.0)
    if raw < 0.0:
        return BufferUpdate(0.0, 0.0, -raw)
    return BufferUpdate(raw, 0.0, 0.0)


def grid_purchase(bs: BsState, b_up: float) -> float:
    """theta = max(0, B_up - B), limited by what is left of the daily cap; 0 when offgrid."""
    if not bs.ongrid:
        return 0.0
    theta = min(max(0.0, b_up - bs.buffer), bs.cap.remaining)
    bs.cap.used += theta
    return theta


def myopic_actions(buffers, b_ref: float) -> np.ndarray:
    """B_ref - B per BS: positive is a demand, negative an offer."""
    return b_ref - np.asarray(buffers, dtype=float)


def outage_probability(buffers) -> float:
    levels = np.asarray(buffers, dtype=float)
    if levels.size == 0:
        raise ValueError("outage probability needs at least one BS")
    return float(np.count_nonzero(levels <= 0.0) / levels.size)
