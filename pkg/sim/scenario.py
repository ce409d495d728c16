"""
Building the per-BS world for a scenario: traces, clusters and purchase caps.
"""

import logging
import math

from traces import TimeSeries, consumption, gen_solar_trace, gen_traffic_trace, load_csv
from sim.state import BsState, PurchaseCap
from utils.errors import TraceError
from utils.models import ScenarioConfig

logger = logging.getLogger(__name__)

# Stream ids that keep the per-BS generators independent of each other.
HARVEST_STREAM = 0
TRAFFIC_STREAM = 1


def required_slots(cfg: ScenarioConfig) -> int:
    """Warm-up plus simulated slots every trace must cover."""
    return cfg.warmup_slots + cfg.days * cfg.slots_per_day


def _generated(cfg: ScenarioConfig, bs: int, days: int) -> tuple[TimeSeries, TimeSeries, int]:
    solar = cfg.solar
    harvest = gen_solar_trace(days, solar.peak_joules, solar.noise_scale, [cfg.seed, bs, HARVEST_STREAM],
                              solar.sunrise, solar.sunset)
    load, cluster = gen_traffic_trace(days, cfg.cluster_profiles(), [cfg.seed, bs, TRAFFIC_STREAM])
    return harvest, load, cluster


def _recorded(cfg: ScenarioConfig, bs: int) -> tuple[TimeSeries, TimeSeries, int]:
    source = cfg.trace_files[bs]
    harvest = load_csv(source.harvest_path, source.harvest_column, kind="energy")
    load = load_csv(source.load_path, source.load_column, kind="load")
    return harvest, load, 0


def build_states(cfg: ScenarioConfig) -> list[BsState]:
    """One BsState per BS with traces covering warm-up plus the simulated days.

    Raises TraceError before anything runs when a recorded trace is too short.
    """
    needed = required_slots(cfg)
    days = max(1, math.ceil(needed / cfg.slots_per_day))
    ongrid = set(cfg.ongrid)
    daily_cap = math.inf if math.isinf(cfg.eta) else cfg.eta * cfg.consumption.full_load_daily_energy()
    start = cfg.initial_buffer * cfg.thresholds.b_max

    states = []
    for bs in range(cfg.n_bs):
        if bs in cfg.trace_files:
            harvest, load, cluster = _recorded(cfg, bs)
        else:
            harvest, load, cluster = _generated(cfg, bs, days)
        for name, series in (("harvest", harvest), ("load", load)):
            if len(series) < needed:
                raise TraceError(f"bs {bs}: {name} trace has {len(series)} slots, scenario needs {needed}")
        states.append(BsState(
            id=bs,
            ongrid=bs in ongrid,
            buffer=start,
            cluster_id=cluster,
            harvest=harvest,
            load=load,
            consumption=consumption(load, cfg.consumption),
            cap=PurchaseCap(limit=daily_cap),
        ))
    logger.debug("built %d BS states over %d slots", len(states), needed)
    return states
