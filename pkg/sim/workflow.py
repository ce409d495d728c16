"""
Scenario Workflow Orchestrator

Runs one scenario slot by slot. Each slot goes through:
1. Grid purchases → 2. Demand/offer decision → 3. Allocation →
4. Routing and transfers → 5. Buffer updates → 6. Metrics
"""

import logging
import uuid
from datetime import datetime
from typing import Iterator, Optional

import numpy as np

from allocation import AllocationProblem, build_problem, sent_energy
from grid import (
    PpgTopology, TransferJob, TransferOutcome, apply_transfers, schedule_transfers,
    topology_from_config, unique_route,
)
from sim.scenario import build_states
from sim.state import BsState, buffer_update, grid_purchase, outage_probability
from sim.strategies import ActionPolicy, Allocator, PredictivePolicy, route_strategy
from utils.errors import PpgError, ScenarioError
from utils.models import RunMetadata, ScenarioConfig, ScenarioResult, ScenarioSummary, SlotMetrics

logger = logging.getLogger(__name__)

# Allocations below this many joules are not worth a transfer job.
MIN_TRANSFER = 1e-6


def _jobs(problem: AllocationProblem, y: np.ndarray, topo: PpgTopology) -> list[TransferJob]:
    amounts = sent_energy(y, problem)
    jobs = []
    for a, b in zip(*np.nonzero(amounts > MIN_TRANSFER)):
        route = unique_route(topo, int(problem.source_ids[a]), int(problem.consumer_ids[b]))
        jobs.append(TransferJob.create(route, float(amounts[a, b]), topo.config.e_max))
    return jobs


def run_slot(t: int, states: list[BsState], topo: PpgTopology, cfg: ScenarioConfig,
             policy: ActionPolicy, allocator: Optional[Allocator]) -> SlotMetrics:
    """Advance every BS by one slot and report the network totals."""
    thresholds = cfg.thresholds
    if t % cfg.slots_per_day == 0:
        for bs in states:
            bs.cap.reset()

    start = np.array([bs.buffer for bs in states])
    theta = np.array([grid_purchase(bs, thresholds.b_up) for bs in states])
    for bs, bought in zip(states, theta):
        bs.purchased.append(float(bought))
    available = start + theta

    outcome: Optional[TransferOutcome] = None
    actions = policy.actions(t, available)
    if actions is not None and allocator is not None:
        problem = build_problem(actions, topo, cfg.beta, scale=thresholds.b_max)
        if not problem.is_empty:
            result = allocator(problem)
            schedule = schedule_transfers(_jobs(problem, result.matrix, topo), topo)
            outcome = apply_transfers(schedule, available, topo)
    net = outcome.net if outcome is not None else np.zeros(len(states))

    harvested = consumed = wasted = unserved = 0.0
    for n, bs in enumerate(states):
        h, o = float(bs.harvest.values[t]), float(bs.consumption.values[t])
        update = buffer_update(start[n], h, o, net[n], theta[n], thresholds.b_max)
        bs.buffer = update.level
        harvested += h
        consumed += o
        wasted += update.wasted
        unserved += update.unserved

    levels = np.array([bs.buffer for bs in states])
    rmse_h, rmse_l = policy.last_rmse if isinstance(policy, PredictivePolicy) else (None, None)
    return SlotMetrics(
        slot=t - cfg.warmup_slots,
        gamma=outage_probability(levels),
        mean_buffer=float(levels.mean()),
        harvested=harvested,
        consumed=consumed,
        purchased=float(theta.sum()),
        sent=outcome.sent if outcome else 0.0,
        delivered=outcome.delivered if outcome else 0.0,
        lost=outcome.lost if outcome else 0.0,
        wasted=wasted,
        unserved=unserved,
        delta_buffer=float((levels - start).sum()),
        truncated_jobs=outcome.truncated if outcome else 0,
        rmse_h=rmse_h,
        rmse_l=rmse_l,
    )


class ScenarioWorkflow:
    """Orchestrates one scenario run."""

    def __init__(self, cfg: ScenarioConfig, topology: Optional[PpgTopology] = None):
        self.cfg = cfg
        self.run_id = str(uuid.uuid4())
        self.start_time: Optional[datetime] = None
        self.topology = topology or topology_from_config(cfg.n_bs, cfg.grid)
        self.states: list[BsState] = []
        self.slots: list[SlotMetrics] = []

    def execute_stream(self) -> Iterator[SlotMetrics]:
        """Yield each slot's metrics as soon as the slot is simulated."""
        self.start_time = datetime.now()
        cfg = self.cfg
        self.states = build_states(cfg)
        self.slots = []
        policy, allocator = route_strategy(cfg, self.states)
        first, stop = cfg.warmup_slots, cfg.warmup_slots + cfg.days * cfg.slots_per_day
        logger.info("scenario %s: %s, p=%.3g, eta=%s, seed=%d, %d slots",
                    self.run_id[:8], cfg.strategy.value, cfg.p, cfg.eta, cfg.seed, stop - first)

        if isinstance(policy, PredictivePolicy) and stop > first:
            try:
                policy.pretrain(first)
            except PpgError as e:
                raise ScenarioError(f"forecaster pre-training failed: {e}", slot=0) from e

        for t in range(first, stop):
            try:
                metrics = run_slot(t, self.states, self.topology, cfg, policy, allocator)
            except PpgError as e:
                raise ScenarioError(str(e), slot=t - first) from e
            self.slots.append(metrics)
            yield metrics

    def execute(self) -> ScenarioResult:
        """Run every slot and aggregate."""
        for _ in self.execute_stream():
            pass
        return self._create_final_result()

    def _create_final_result(self) -> ScenarioResult:
        execution_time = (datetime.now() - self.start_time).total_seconds() if self.start_time else 0
        metadata = RunMetadata(run_id=self.run_id, execution_time_seconds=execution_time)
        notice = None if self.slots else "no slots to simulate after warm-up"
        logger.info("scenario %s finished in %.2fs", self.run_id[:8], execution_time)
        return ScenarioResult(
            slots=self.slots,
            purchased_per_bs=[bs.total_purchased for bs in self.states],
            clusters=[bs.cluster_id for bs in self.states],
            summary=summarize(self.cfg, self.slots),
            metadata=metadata,
            notice=notice,
        )


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def summarize(cfg: ScenarioConfig, slots: list[SlotMetrics]) -> ScenarioSummary:
    gammas = [s.gamma for s in slots]
    return ScenarioSummary(
        strategy=cfg.strategy,
        p=cfg.p,
        eta=cfg.eta,
        seed=cfg.seed,
        slots=len(slots),
        mean_gamma=_mean(gammas) or 0.0,
        max_gamma=max(gammas, default=0.0),
        mean_buffer=_mean(s.mean_buffer for s in slots) or 0.0,
        total_purchased=sum(s.purchased for s in slots),
        total_sent=sum(s.sent for s in slots),
        total_delivered=sum(s.delivered for s in slots),
        total_lost=sum(s.lost for s in slots),
        total_wasted=sum(s.wasted for s in slots),
        total_unserved=sum(s.unserved for s in slots),
        mean_rmse_h=_mean(s.rmse_h for s in slots),
        mean_rmse_l=_mean(s.rmse_l for s in slots),
    )


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    return ScenarioWorkflow(cfg).execute()
