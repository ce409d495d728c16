import math

import numpy as np
import pytest

from grid import build_default_topology
from sim import (
    BsState, NoExchangePolicy, PurchaseCap, ScenarioWorkflow, build_states, buffer_update, grid_purchase,
    myopic_actions, outage_probability, required_slots, route_strategy, run_scenario, run_slot,
)
from traces import TimeSeries
from utils.errors import TraceError
from utils.models import GridConfig, ScenarioConfig, Strategy, TraceSource

B_MAX = 360e3


def make_bs(buffer: float, ongrid: bool = True, limit: float = math.inf) -> BsState:
    empty = TimeSeries(np.zeros(24))
    return BsState(id=0, ongrid=ongrid, buffer=buffer, cluster_id=1, harvest=empty,
                   load=TimeSeries(np.zeros(24), kind="load"), consumption=empty,
                   cap=PurchaseCap(limit=limit))


def accounting_gap(slot) -> float:
    expected = slot.harvested - slot.consumed + slot.purchased - slot.lost - slot.wasted + slot.unserved
    return abs(slot.delta_buffer - expected)


class TestBufferUpdate:
    def test_plain_sum(self):
        update = buffer_update(100e3, 50e3, 30e3, 0.0, 0.0, B_MAX)
        assert update.level == pytest.approx(120e3)
        assert update.wasted == update.unserved == 0.0

    def test_overflow_is_wasted(self):
        update = buffer_update(350e3, 50e3, 10e3, 0.0, 0.0, B_MAX)
        assert update.level == B_MAX
        assert update.wasted == pytest.approx(30e3)

    def test_shortfall_is_unserved(self):
        update = buffer_update(10e3, 0.0, 30e3, 0.0, 0.0, B_MAX)
        assert update.level == 0.0
        assert update.unserved == pytest.approx(20e3)
        assert update.depleted

    def test_transfers_and_purchases_count(self):
        update = buffer_update(100e3, 0.0, 20e3, -40e3, 15e3, B_MAX)
        assert update.level == pytest.approx(55e3)


class TestGridPurchase:
    def test_tops_up_to_threshold(self):
        assert grid_purchase(make_bs(200e3), 252e3) == pytest.approx(52e3)

    def test_nothing_above_threshold(self):
        assert grid_purchase(make_bs(300e3), 252e3) == 0.0

    def test_offgrid_never_buys(self):
        assert grid_purchase(make_bs(0.0, ongrid=False), 252e3) == 0.0

    def test_daily_cap(self):
        bs = make_bs(0.0, limit=60e3)
        assert grid_purchase(bs, 252e3) == pytest.approx(60e3)
        assert grid_purchase(bs, 252e3) == 0.0
        bs.cap.reset()
        assert grid_purchase(bs, 252e3) == pytest.approx(60e3)

    def test_uncapped(self):
        bs = make_bs(0.0)
        assert grid_purchase(bs, 252e3) == pytest.approx(252e3)
        assert bs.cap.remaining == math.inf


class TestSlotRules:
    def test_myopic_actions(self):
        np.testing.assert_allclose(myopic_actions([100e3, 180e3, 250e3], 180e3), [80e3, 0.0, -70e3])

    def test_outage_probability(self):
        assert outage_probability([0.0, 10.0, 0.0, 5.0]) == 0.5
        assert outage_probability([1.0]) == 0.0
        with pytest.raises(ValueError):
            outage_probability([])


class TestScenarioSetup:
    def test_states(self, small_scenario):
        states = build_states(small_scenario)
        assert len(states) == 6
        assert [bs.ongrid for bs in states] == [True, False, False, True, False, False]
        assert all(bs.buffer == 0.5 * B_MAX for bs in states)
        assert all(len(bs.harvest) >= required_slots(small_scenario) for bs in states)

    def test_purchase_cap_from_eta(self, small_scenario):
        cfg = small_scenario.model_copy(update={"eta": 0.5})
        states = build_states(cfg)
        assert states[0].cap.limit == pytest.approx(0.5 * cfg.consumption.full_load_daily_energy())

    def test_recorded_trace_too_short(self, small_scenario, write_text):
        harvest = write_text("h.csv", "harvest\n" + "1000\n" * 10)
        load = write_text("l.csv", "load\n" + "0.5\n" * 10)
        cfg = small_scenario.model_copy(
            update={"trace_files": {0: TraceSource(harvest_path=str(harvest), load_path=str(load))}})
        with pytest.raises(TraceError):
            ScenarioWorkflow(cfg).execute()

    def test_warmup_rounds_to_days(self):
        cfg = ScenarioConfig(strategy=Strategy.GPS_MPC_CONV)
        assert cfg.warmup_slots == 168
        assert cfg.model_copy(update={"gp": cfg.gp.model_copy(update={"window": 170})}).warmup_slots == 192
        assert ScenarioConfig(strategy=Strategy.CONV).warmup_slots == 0


class TestRunSlot:
    def test_no_exchange_moves_nothing(self, small_scenario):
        cfg = small_scenario.model_copy(update={"strategy": Strategy.NOEE})
        states = build_states(cfg)
        metrics = run_slot(0, states, build_default_topology(6, cfg.grid), cfg, NoExchangePolicy(), None)
        assert metrics.sent == metrics.delivered == metrics.lost == 0.0
        assert accounting_gap(metrics) <= 1e-6 * B_MAX

    def test_single_bs_has_no_partner(self):
        cfg = ScenarioConfig(n_bs=1, ongrid=[], days=1, strategy=Strategy.CONV)
        result = run_scenario(cfg)
        assert len(result.slots) == 24
        assert all(s.sent == 0.0 for s in result.slots)


class TestScenario:
    @pytest.mark.parametrize("strategy", [Strategy.NOEE, Strategy.CONV, Strategy.HUNG])
    def test_accounting_identity(self, small_scenario, strategy):
        result = run_scenario(small_scenario.model_copy(update={"strategy": strategy}))
        assert len(result.slots) == 24
        for slot in result.slots:
            assert accounting_gap(slot) <= 1e-6 * B_MAX
            assert slot.delivered <= slot.sent + 1e-9
            assert 0.0 <= slot.mean_buffer <= B_MAX

    def test_offgrid_never_buys(self, small_scenario):
        result = run_scenario(small_scenario)
        for bs, bought in enumerate(result.purchased_per_bs):
            if bs not in small_scenario.ongrid:
                assert bought == 0.0

    def test_exchange_moves_energy(self, small_scenario):
        result = run_scenario(small_scenario.model_copy(update={"strategy": Strategy.HUNG}))
        assert result.summary.total_sent > 0
        assert result.summary.total_lost >= 0

    def test_deterministic(self, small_scenario):
        a = run_scenario(small_scenario)
        b = run_scenario(small_scenario)
        assert [s.model_dump() for s in a.slots] == [s.model_dump() for s in b.slots]
        assert a.clusters == b.clusters

    def test_no_exchange_ignores_topology(self, small_scenario):
        cfg = small_scenario.model_copy(update={"strategy": Strategy.NOEE})
        one = run_scenario(cfg.model_copy(update={"grid": GridConfig(branches=1)}))
        three = run_scenario(cfg.model_copy(update={"grid": GridConfig(branches=3)}))
        assert [s.gamma for s in one.slots] == [s.gamma for s in three.slots]

    def test_zero_days(self, small_scenario):
        result = run_scenario(small_scenario.model_copy(update={"days": 0}))
        assert result.slots == []
        assert result.notice
        assert result.summary.slots == 0

    def test_stream_yields_every_slot(self, small_scenario):
        workflow = ScenarioWorkflow(small_scenario)
        slots = [m.slot for m in workflow.execute_stream()]
        assert slots == list(range(24))

    def test_predictive_strategy(self, predictive_scenario):
        cfg = predictive_scenario.model_copy(update={"strategy": Strategy.GPS_MPC_HUNG})
        result = run_scenario(cfg)
        assert len(result.slots) == 24
        assert result.slots[0].slot == 0
        assert all(s.rmse_h is not None and s.rmse_l is not None for s in result.slots)
        for slot in result.slots:
            assert accounting_gap(slot) <= 1e-6 * B_MAX

    def test_predictive_policy_plans_with_refill(self, predictive_scenario):
        cfg = predictive_scenario.model_copy(update={"strategy": Strategy.GPS_MPC_CONV})
        states = build_states(cfg)
        policy, _ = route_strategy(cfg, states)
        t = cfg.warmup_slots
        policy.pretrain(t)
        buffers = np.array([bs.buffer for bs in states])
        plain = policy.disturbance(t)
        refilled = policy.disturbance(t, buffers)
        np.testing.assert_array_equal(refilled.mean[:, 1:], plain.mean[:, 1:])
        assert np.all(refilled.mean[:, 0] >= plain.mean[:, 0])

        u = policy.actions(t, buffers)
        assert policy.controller.slot == t + 1
        np.testing.assert_allclose(u, policy.controller.last_plan.u[0])

    def test_refill_can_be_switched_off(self, predictive_scenario):
        cfg = predictive_scenario.model_copy(update={"strategy": Strategy.GPS_MPC_CONV, "model_refill": False})
        states = build_states(cfg)
        policy, _ = route_strategy(cfg, states)
        t = cfg.warmup_slots
        policy.pretrain(t)
        buffers = np.array([bs.buffer for bs in states])
        np.testing.assert_array_equal(policy.disturbance(t, buffers).mean, policy.disturbance(t).mean)

    def test_route_strategy(self, small_scenario):
        states = build_states(small_scenario)
        policy, allocator = route_strategy(small_scenario.model_copy(update={"strategy": Strategy.NOEE}), states)
        assert allocator is None
        assert policy.actions(0, np.zeros(6)) is None


def _weekly(strategy: Strategy, seed: int, **kwargs) -> ScenarioConfig:
    return ScenarioConfig(strategy=strategy, seed=seed, days=7, **kwargs)


SEEDS = range(1, 11)
ETAS = (0.1, 0.3, 0.5, 0.7, 1.0)


def _mean_over_seeds(strategy: Strategy, metric: str, seeds=SEEDS, **kwargs) -> float:
    return float(np.mean([getattr(run_scenario(_weekly(strategy, s, **kwargs)).summary, metric) for s in seeds]))


@pytest.mark.slow
def test_exchange_reduces_outages():
    noee = _mean_over_seeds(Strategy.NOEE, "mean_gamma")
    hung = _mean_over_seeds(Strategy.HUNG, "mean_gamma")
    predictive = _mean_over_seeds(Strategy.GPS_MPC_HUNG, "mean_gamma")
    assert noee >= hung >= predictive


@pytest.mark.slow
@pytest.mark.parametrize("strategy", [Strategy.CONV, Strategy.GPS_MPC_CONV])
def test_no_outages_in_the_light_cluster(strategy):
    for seed in (1, 2, 3):
        result = run_scenario(_weekly(strategy, seed, p=1.0))
        assert all(slot.gamma == 0.0 for slot in result.slots)


@pytest.mark.slow
def test_forecasts_reduce_purchases():
    myopic = _mean_over_seeds(Strategy.CONV, "total_purchased")
    predictive = _mean_over_seeds(Strategy.GPS_MPC_CONV, "total_purchased")
    assert predictive <= 0.7 * myopic


@pytest.mark.slow
def test_purchase_cap_sweep():
    gamma = {
        strategy: [_mean_over_seeds(strategy, "mean_gamma", seeds=(1, 2, 3), eta=eta) for eta in ETAS]
        for strategy in (Strategy.CONV, Strategy.GPS_MPC_CONV)
    }
    for values in gamma.values():
        assert all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))
    assert all(p <= c + 1e-12 for p, c in zip(gamma[Strategy.GPS_MPC_CONV], gamma[Strategy.CONV]))
