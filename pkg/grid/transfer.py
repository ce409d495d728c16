"""
Applying a mini-slot schedule to the buffers within one slot.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from grid.routing import MiniSlotSchedule
from grid.topology import PpgTopology, attenuation
from utils.models import SECONDS_PER_HOUR

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransferRecord:
    source: int
    consumer: int
    hops: int
    planned: float
    sent: float
    delivered: float
    truncated: bool

    @property
    def lost(self) -> float:
        return self.sent - self.delivered

    @property
    def shortfall(self) -> float:
        return self.planned - self.sent


@dataclass(frozen=True)
class TransferOutcome:
    """Buffers after the transfers, the per-BS net change T_n and the ledger."""
    buffers: np.ndarray
    net: np.ndarray
    ledger: list[TransferRecord]

    @property
    def sent(self) -> float:
        return float(sum(r.sent for r in self.ledger))

    @property
    def delivered(self) -> float:
        return float(sum(r.delivered for r in self.ledger))

    @property
    def lost(self) -> float:
        return float(sum(r.lost for r in self.ledger))

    @property
    def truncated(self) -> int:
        return sum(1 for r in self.ledger if r.truncated)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{**r.__dict__, "lost": r.lost} for r in self.ledger],
                            columns=["source", "consumer", "hops", "planned", "sent", "delivered",
                                     "truncated", "lost"])


def minislot_budget(topo: PpgTopology) -> int:
    return int(SECONDS_PER_HOUR // topo.config.minislot_seconds)


def apply_transfers(schedule: MiniSlotSchedule, buffers, topo: PpgTopology,
                    budget: Optional[int] = None) -> TransferOutcome:
    """Move energy along the scheduled jobs, in start order.

    Jobs running past the mini-slot budget ship only the fraction that fits, and
    a source never sends more than it holds at that point. Both cases set the
    truncation flag.
    """
    budget = minislot_budget(topo) if budget is None else budget
    levels = np.array(buffers, dtype=float)
    net = np.zeros_like(levels)
    ledger: list[TransferRecord] = []

    for entry in sorted(schedule.entries, key=lambda e: (e.start, e.job.source, e.job.consumer)):
        job = entry.job
        route = job.route
        planned = job.energy
        amount = planned
        truncated = False
        if entry.end > budget:
            fits = max(0, budget - entry.start)
            amount = planned * fits / (entry.end - entry.start)
            truncated = True
        available = max(0.0, levels[job.source])
        if amount > available:
            amount = available
            truncated = True
        delivered = amount * attenuation(topo, route.hop_count)
        levels[job.source] -= amount
        levels[job.consumer] += delivered
        net[job.source] -= amount
        net[job.consumer] += delivered
        ledger.append(TransferRecord(job.source, job.consumer, route.hop_count, planned, amount,
                                     delivered, truncated))
        if truncated:
            logger.info("transfer %d->%d truncated: planned %.4g J, sent %.4g J",
                        job.source, job.consumer, planned, amount)
    return TransferOutcome(levels, net, ledger)
