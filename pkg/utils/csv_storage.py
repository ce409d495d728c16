"""
CSV storage for run outputs.
Writes per-run slot metrics, seed-averaged summaries, comparison tables and
forecast reports, and loads them back. Schemas are listed in docs/output_formats.md.
"""

import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from utils.models import ScenarioResult, ScenarioSummary, SlotMetrics

METRIC_COLUMNS = list(SlotMetrics.model_fields)
SUMMARY_METRICS = [
    "mean_gamma", "max_gamma", "mean_buffer", "total_purchased", "total_sent", "total_delivered",
    "total_lost", "total_wasted", "total_unserved", "mean_rmse_h", "mean_rmse_l",
]
SUMMARY_COLUMNS = ["strategy", "axis", "value", "seeds"] + [
    f"{m}_{stat}" for m in SUMMARY_METRICS for stat in ("mean", "std")]
NO_SWEEP = "none"


def sweep_label(axis: str, value: Optional[float]) -> str:
    """'p0.5', 'eta2' or 'base' when nothing is swept."""
    if axis == NO_SWEEP or value is None:
        return "base"
    return f"{axis}{value:g}"


class MetricsStorage:
    """Handles writing and reading the CSV outputs of one output directory."""

    def __init__(self, storage_dir: str = "outputs"):
        self.storage_dir = Path(storage_dir)

    def ensure_writable(self):
        """Create the directory and prove a file can be written there; raises OSError otherwise."""
        self.storage_dir.mkdir(parents=True, exist_ok=True)
        marker = self.storage_dir / ".write_check"
        marker.write_text("", encoding="utf-8")
        marker.unlink()

    def metrics_path(self, strategy: str, axis: str, value: Optional[float], seed: int) -> Path:
        return self.storage_dir / f"metrics_{strategy}_{sweep_label(axis, value)}_seed{seed}.csv"

    def summary_path(self, strategy: str, axis: str, value: Optional[float]) -> Path:
        return self.storage_dir / f"summary_{strategy}_{sweep_label(axis, value)}.csv"

    def save_metrics(self, result: ScenarioResult, axis: str, value: Optional[float]) -> Path:
        summary = result.summary
        path = self.metrics_path(summary.strategy.value, axis, value, summary.seed)
        frame = pd.DataFrame([s.model_dump() for s in result.slots], columns=METRIC_COLUMNS)
        frame.to_csv(path, index=False)
        return path

    def save_summary(self, summaries: Sequence[ScenarioSummary], axis: str, value: Optional[float]) -> Path:
        """Seed mean and standard deviation (population) of every summary metric."""
        if not summaries:
            raise ValueError("nothing to summarize")
        strategy = summaries[0].strategy.value
        row = {"strategy": strategy, "axis": axis, "value": value, "seeds": len(summaries)}
        for metric in SUMMARY_METRICS:
            values = [getattr(s, metric) for s in summaries if getattr(s, metric) is not None]
            row[f"{metric}_mean"] = float(np.mean(values)) if values else math.nan
            row[f"{metric}_std"] = float(np.std(values)) if values else math.nan
        path = self.summary_path(strategy, axis, value)
        pd.DataFrame([row], columns=SUMMARY_COLUMNS).to_csv(path, index=False)
        return path

    def save_frame(self, frame: pd.DataFrame, filename: str) -> Path:
        path = self.storage_dir / filename
        frame.to_csv(path, index=False)
        return path

    def list_outputs(self, pattern: str = "*.csv") -> list[str]:
        return sorted(f.name for f in self.storage_dir.glob(pattern))


def load_metrics(path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = set(METRIC_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is not a metrics file (missing {sorted(missing)})")
    return frame


def load_summary(path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype={"strategy": str, "axis": str})
    missing = set(SUMMARY_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is not a summary file (missing {sorted(missing)})")
    return frame


# Convenience function for one-line usage
def save_scenario_result(result: ScenarioResult, storage_dir: str = "outputs",
                         axis: str = NO_SWEEP, value: Optional[float] = None) -> str:
    storage = MetricsStorage(storage_dir)
    storage.ensure_writable()
    return str(storage.save_metrics(result, axis, value))
