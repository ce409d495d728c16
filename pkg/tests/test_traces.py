import numpy as np
import pytest
from pydantic import ValidationError

from traces import (
    TimeSeries, consumption, denormalize, gen_solar_trace, gen_traffic_trace, load_csv, normalize,
)
from utils.errors import TraceError
from utils.models import ClusterProfiles, ConsumptionModel


class TestTimeSeries:
    def test_rejects_negative_values(self):
        with pytest.raises(TraceError):
            TimeSeries(np.array([1.0, -0.5]))

    def test_rejects_load_above_one(self):
        with pytest.raises(TraceError):
            TimeSeries(np.array([0.2, 1.5]), kind="load")

    def test_values_are_read_only(self):
        series = TimeSeries(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            series.values[0] = 5.0

    def test_window_keeps_absolute_slots(self):
        series = TimeSeries(np.arange(10.0), start_slot=100)
        sub = series.window(3, 6)
        assert list(sub.slots()) == [103, 104, 105]
        assert list(sub.values) == [3.0, 4.0, 5.0]


class TestSolar:
    def test_noiseless_day(self):
        day = gen_solar_trace(1, 100e3, 0.0, seed=0)
        assert len(day) == 24
        assert day.values[0] == 0.0
        assert day.values[12] == pytest.approx(100e3)

    def test_noiseless_days_repeat(self):
        two = gen_solar_trace(2, 100e3, 0.0, seed=3)
        np.testing.assert_array_equal(two.values[:24], two.values[24:])

    def test_noisy_trace_is_dark_at_night(self):
        trace = gen_solar_trace(60, 150e3, 0.2, seed=7)
        hours = np.arange(len(trace)) % 24
        assert np.all(trace.values >= 0)
        assert np.all(trace.values[(hours <= 6) | (hours >= 18)] == 0.0)

    def test_custom_daylight(self):
        trace = gen_solar_trace(1, 1.0, 0.0, seed=0, sunrise=8, sunset=16)
        assert np.all(trace.values[:9] == 0.0)
        assert trace.values[12] == pytest.approx(1.0)

    @pytest.mark.parametrize("days,peak,noise", [(0, 1.0, 0.1), (1, 0.0, 0.1), (1, 1.0, -0.1)])
    def test_preconditions(self, days, peak, noise):
        with pytest.raises(TraceError):
            gen_solar_trace(days, peak, noise, seed=0)


class TestTraffic:
    def test_degenerate_probabilities(self):
        for seed in range(20):
            assert gen_traffic_trace(1, ClusterProfiles(p=0.0), seed)[1] == 1
            assert gen_traffic_trace(1, ClusterProfiles(p=1.0), seed)[1] == 2

    def test_cluster_frequency_tracks_p(self):
        profiles = ClusterProfiles(p=0.5)
        picks = [gen_traffic_trace(1, profiles, seed)[1] for seed in range(10_000)]
        assert np.mean(np.array(picks) == 2) == pytest.approx(0.5, abs=0.02)

    def test_template_is_tiled(self):
        load, cluster = gen_traffic_trace(3, ClusterProfiles(p=0.0), seed=1)
        assert cluster == 1
        assert load.kind == "load"
        np.testing.assert_allclose(load.values, np.tile(ClusterProfiles().cluster1, 3))

    def test_jitter_stays_in_unit_interval(self):
        load, _ = gen_traffic_trace(5, ClusterProfiles(p=0.5, jitter=0.3), seed=2)
        assert load.values.min() >= 0.0 and load.values.max() <= 1.0

    def test_profiles_need_24_values(self):
        with pytest.raises(ValidationError):
            ClusterProfiles(cluster1=[0.5] * 23)

    def test_heavy_cluster_first(self):
        with pytest.raises(ValidationError):
            ClusterProfiles(cluster1=[0.1] * 24, cluster2=[0.9] * 24)


class TestConsumption:
    def test_idle_drain(self):
        out = consumption(TimeSeries(np.zeros(3), kind="load"), ConsumptionModel(base_power=100, load_slope=200))
        np.testing.assert_allclose(out.values, 360e3)

    def test_full_load(self):
        out = consumption(TimeSeries(np.ones(1), kind="load"), ConsumptionModel(base_power=0, load_slope=200))
        assert out.values[0] == pytest.approx(720e3)

    def test_half_load(self):
        out = consumption(TimeSeries(np.array([0.5]), kind="load"), ConsumptionModel())
        assert out.values[0] == pytest.approx(720e3)

    def test_monotone_in_load(self, rng):
        low = rng.random(50)
        high = np.clip(low + rng.random(50) * 0.3, 0, 1)
        model = ConsumptionModel()
        a = consumption(TimeSeries(low, kind="load"), model).values
        b = consumption(TimeSeries(high, kind="load"), model).values
        assert np.all(a <= b)

    def test_requires_load_series(self):
        with pytest.raises(TraceError):
            consumption(TimeSeries(np.ones(2)), ConsumptionModel())


class TestLoadCsv:
    def test_reads_column(self, write_text):
        path = write_text("h.csv", "harvest\n10\n20\n30\n")
        assert list(load_csv(path).values) == [10.0, 20.0, 30.0]

    def test_named_column(self, write_text):
        path = write_text("h.csv", "slot,harvest\n0,5\n1,6\n")
        assert list(load_csv(path, "harvest").values) == [5.0, 6.0]

    def test_malformed_row_is_reported(self, write_text):
        path = write_text("h.csv", "harvest\n10\nabc\n30\n")
        with pytest.raises(TraceError) as info:
            load_csv(path)
        assert info.value.row == 2

    def test_negative_value(self, write_text):
        path = write_text("h.csv", "harvest\n10\n-1\n")
        with pytest.raises(TraceError) as info:
            load_csv(path)
        assert info.value.row == 2

    def test_empty_file(self, write_text):
        with pytest.raises(TraceError):
            load_csv(write_text("h.csv", ""))

    def test_header_only(self, write_text):
        with pytest.raises(TraceError):
            load_csv(write_text("h.csv", "harvest\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(TraceError):
            load_csv(tmp_path / "absent.csv")

    def test_missing_column(self, write_text):
        with pytest.raises(TraceError):
            load_csv(write_text("h.csv", "harvest\n1\n"), "load")


class TestNormalize:
    def test_divides_by_max(self):
        out, scale = normalize(TimeSeries(np.array([2.0, 4.0, 8.0])))
        assert scale == 8.0
        np.testing.assert_allclose(out.values, [0.25, 0.5, 1.0])

    def test_already_normalized(self):
        values = np.array([0.1, 1.0, 0.4])
        out, scale = normalize(TimeSeries(values))
        assert scale == 1.0
        np.testing.assert_array_equal(out.values, values)

    def test_inverse(self, rng):
        series = TimeSeries(rng.random(100) * 1e5)
        out, scale = normalize(series)
        np.testing.assert_allclose(denormalize(out, scale).values, series.values, rtol=1e-12)

    def test_all_zero(self):
        with pytest.raises(TraceError):
            normalize(TimeSeries(np.zeros(4)))
