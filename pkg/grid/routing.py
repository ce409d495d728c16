"""
Mini-slot scheduling of energy transfers over link-disjoint routes.

A transfer occupies every link on its route for n = ceil(energy / e_max)
consecutive mini-slots. Jobs are admitted greedily, longest first, and each
time a job completes the waiting list is scanned again for routes that are now
free.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import pandas as pd

from grid.topology import PpgTopology, Route
from utils.errors import TopologyError

logger = logging.getLogger(__name__)


def required_minislots(energy: float, e_max: float) -> int:
    if energy < 0:
        raise ValueError(f"energy must be non-negative, got {energy}")
    if e_max <= 0:
        raise ValueError(f"e_max must be positive, got {e_max}")
    return math.ceil(energy / e_max) if energy > 0 else 0


@dataclass(frozen=True)
class TransferJob:
    """Energy to push from route.source to route.consumer, measured at the source."""
    route: Route
    energy: float
    n_minislots: int

    @classmethod
    def create(cls, route: Route, energy: float, e_max: float) -> "TransferJob":
        return cls(route, energy, required_minislots(energy, e_max))

    @property
    def source(self) -> int:
        return self.route.source

    @property
    def consumer(self) -> int:
        return self.route.consumer


@dataclass(frozen=True)
class ScheduledJob:
    job: TransferJob
    start: int
    end: int


@dataclass(frozen=True)
class MiniSlotSchedule:
    entries: list[ScheduledJob] = field(default_factory=list)

    @property
    def makespan(self) -> int:
        return max((e.end for e in self.entries), default=0)

    def __len__(self) -> int:
        return len(self.entries)


def schedule_transfers(jobs: list[TransferJob], topo: PpgTopology) -> MiniSlotSchedule:
    """Event-driven greedy schedule; zero-length jobs are left out."""
    known = topo.links
    for job in jobs:
        unknown = job.route.links - known
        if unknown:
            raise TopologyError(f"job {job.source}->{job.consumer} uses unknown links {sorted(unknown)}")

    waiting = sorted((j for j in jobs if j.n_minislots > 0),
                     key=lambda j: (-j.n_minislots, j.source, j.consumer))
    busy_until: dict[int, int] = {}
    entries: list[ScheduledJob] = []
    now = 0
    while waiting:
        still_waiting = []
        for job in waiting:
            if all(busy_until.get(link, 0) <= now for link in job.route.links):
                end = now + job.n_minislots
                for link in job.route.links:
                    busy_until[link] = end
                entries.append(ScheduledJob(job, now, end))
            else:
                still_waiting.append(job)
        waiting = still_waiting
        if waiting:
            now = min(t for t in busy_until.values() if t > now)
    return MiniSlotSchedule(entries)


def find_link_conflicts(schedule: MiniSlotSchedule) -> list[tuple[int, int]]:
    """(link, mini-slot) pairs claimed by more than one job; empty for a valid schedule."""
    usage: dict[tuple[int, int], int] = defaultdict(int)
    for entry in schedule.entries:
        for link in entry.job.route.links:
            for slot in range(entry.start, entry.end):
                usage[(link, slot)] += 1
    return sorted(key for key, count in usage.items() if count > 1)


def schedule_to_frame(schedule: MiniSlotSchedule) -> pd.DataFrame:
    """One row per (job, link, mini-slot)."""
    rows = []
    for index, entry in enumerate(schedule.entries):
        for link in sorted(entry.job.route.links):
            for slot in range(entry.start, entry.end):
                rows.append({"job": index, "source": entry.job.source, "consumer": entry.job.consumer,
                             "link": link, "minislot": slot})
    return pd.DataFrame(rows, columns=["job", "source", "consumer", "link", "minislot"])
