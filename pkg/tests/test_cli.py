import json

import numpy as np
import pandas as pd
import pytest

from cli import build_parser, compare_summaries, main
from cli.models import RunSpec
from gp import Hyper, SPKernel, dump_kernel
from utils.csv_storage import METRIC_COLUMNS, SUMMARY_COLUMNS, load_metrics, load_summary
from utils.errors import ConfigError


def frozen_kernel_file(tmp_path):
    kernel = SPKernel(sigma=Hyper(value=1.0, trainable=False), period=Hyper(value=24.0, trainable=False),
                      lengthscale=Hyper(value=1.0, trainable=False))
    path = tmp_path / "kernel.json"
    path.write_text(dump_kernel(kernel), encoding="utf-8")
    return path


def csv_files(root):
    return sorted(p.name for p in root.rglob("*.csv"))


class TestRun:
    def test_single_run(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--out", str(out), "--days", "1", "--strategies", "NOEE"]) == 0
        assert csv_files(out) == ["metrics_NOEE_base_seed1.csv", "summary_NOEE_base.csv"]
        metrics = load_metrics(out / "metrics_NOEE_base_seed1.csv")
        assert list(metrics.columns) == METRIC_COLUMNS
        assert len(metrics) == 24
        summary = load_summary(out / "summary_NOEE_base.csv")
        assert list(summary.columns) == SUMMARY_COLUMNS
        assert summary.loc[0, "seeds"] == 1

    def test_sweep_writes_one_file_per_run(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["run", "--out", str(out), "--days", "1", "--sweep-p", "0,0.5,1",
                     "--strategies", "NOEE,HUNG", "--seeds", "1,2,3"])
        assert code == 0
        names = csv_files(out)
        assert len([n for n in names if n.startswith("metrics_")]) == 18
        assert len([n for n in names if n.startswith("summary_")]) == 6
        summary = load_summary(out / "summary_HUNG_p0.5.csv")
        assert summary.loc[0, "seeds"] == 3
        assert summary.loc[0, "value"] == 0.5

    def test_config_file(self, tmp_path):
        scenario = tmp_path / "scenario.json"
        scenario.write_text(json.dumps({"n_bs": 4, "ongrid": [0], "days": 1}), encoding="utf-8")
        out = tmp_path / "out"
        assert main(["run", "--config", str(scenario), "--out", str(out), "--strategies", "CONV"]) == 0
        assert len(load_metrics(out / "metrics_CONV_base_seed1.csv")) == 24

    def test_invalid_config_names_field(self, tmp_path, capsys):
        scenario = tmp_path / "scenario.json"
        scenario.write_text(json.dumps({"p": 2}), encoding="utf-8")
        assert main(["run", "--config", str(scenario), "--out", str(tmp_path / "out")]) == 1
        assert "p" in capsys.readouterr().err
        assert csv_files(tmp_path) == []

    def test_unwritable_output_leaves_nothing(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        code = main(["run", "--out", str(blocker / "sub"), "--days", "1", "--strategies", "NOEE"])
        assert code == 1
        assert "out" in capsys.readouterr().err
        assert csv_files(tmp_path) == []

    def test_sweep_needs_values(self, tmp_path):
        with pytest.raises(ValueError):
            RunSpec(output_dir=tmp_path, axis="p", strategies=["NOEE"], seeds=[1])

    def test_unknown_strategy(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--strategies", "FAST"])


class TestCompare:
    @pytest.fixture
    def summaries(self, tmp_path):
        out = tmp_path / "runs"
        assert main(["run", "--out", str(out), "--days", "1", "--sweep-p", "0,1",
                     "--strategies", "NOEE,HUNG"]) == 0
        return out

    def test_wide_table(self, summaries, tmp_path):
        paths = sorted(str(p) for p in summaries.glob("summary_*.csv"))
        assert main(["compare", *paths, "--out", str(tmp_path / "cmp")]) == 0
        table = pd.read_csv(tmp_path / "cmp" / "compare.csv")
        assert len(table) == 2
        assert list(table["value"]) == [0.0, 1.0]
        assert (table["axis"] == "p").all()
        np.testing.assert_array_equal(table["total_sent_NOEE"], 0.0)
        assert "mean_gamma_HUNG" in table.columns

    def test_mixed_axes(self, summaries, tmp_path):
        other = tmp_path / "eta"
        assert main(["run", "--out", str(other), "--days", "1", "--sweep-eta", "1",
                     "--strategies", "NOEE"]) == 0
        paths = [str(summaries / "summary_NOEE_p0.csv"), str(other / "summary_NOEE_eta1.csv")]
        assert main(["compare", *paths, "--out", str(tmp_path / "cmp")]) == 1

    def test_needs_two(self, summaries):
        frame = load_summary(summaries / "summary_NOEE_p0.csv")
        with pytest.raises(ConfigError):
            compare_summaries([frame])

    def test_missing_file(self, tmp_path):
        assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"),
                     "--out", str(tmp_path)]) == 1


class TestForecast:
    def test_constant_trace(self, tmp_path, capsys):
        trace = tmp_path / "flat.csv"
        trace.write_text("harvest\n" + "0.7\n" * 80, encoding="utf-8")
        kernel = frozen_kernel_file(tmp_path)
        code = main(["forecast", str(trace), "--kernel", str(kernel), "--window", "48", "--horizon", "6",
                     "--out", str(tmp_path / "fc")])
        assert code == 0
        table = pd.read_csv(tmp_path / "fc" / "forecast_flat.csv")
        assert len(table) == 80 - 54
        assert len([c for c in table.columns if c.startswith("mean_")]) == 6
        assert table["rmse"].max() <= 1e-4
        assert table["running_rmse"].iloc[-1] == pytest.approx(table["rmse"].mean())
        assert "steps=26" in capsys.readouterr().out

    def test_short_trace(self, tmp_path, capsys):
        trace = tmp_path / "short.csv"
        trace.write_text("harvest\n" + "0.7\n" * 20, encoding="utf-8")
        assert main(["forecast", str(trace), "--window", "48", "--horizon", "6",
                     "--out", str(tmp_path / "fc")]) == 1
        assert "window + horizon + 1" in capsys.readouterr().err

    def test_bad_trace(self, tmp_path, capsys):
        trace = tmp_path / "bad.csv"
        trace.write_text("harvest\n1\nabc\n", encoding="utf-8")
        assert main(["forecast", str(trace), "--out", str(tmp_path)]) == 1
        assert "row 2" in capsys.readouterr().err
