"""
Implementations of the run, compare and forecast subcommands.

Each returns a process exit status; PpgError subclasses propagate to the entry
point, which turns them into a one-line diagnostic.
"""

import asyncio
import itertools
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from cli.models import ForecastSpec, RunSpec
from gp import default_kernel, load_kernel, mean_rmse, rolling_forecast
from sim import run_scenario
from traces import load_csv, normalize
from utils.config import config
from utils.csv_storage import SUMMARY_METRICS, MetricsStorage, load_summary
from utils.errors import ConfigError
from utils.models import ScenarioConfig, ScenarioResult, Strategy

logger = logging.getLogger(__name__)


def _field_error(e: ValidationError) -> ConfigError:
    first = e.errors()[0]
    return ConfigError(first["msg"], field=".".join(str(p) for p in first["loc"]) or None)


def load_scenario(path: Optional[Path]) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}", field="config")
    try:
        return ScenarioConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise _field_error(e) from e


def scenario_variant(base: ScenarioConfig, strategy: Strategy, axis: str, value: Optional[float],
                     seed: int, days: Optional[int]) -> ScenarioConfig:
    data = base.model_dump()
    data.update(strategy=strategy, seed=seed)
    if axis != "none":
        data[axis] = value
    if days is not None:
        data["days"] = days
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise _field_error(e) from e


async def _run_all(cfgs: Sequence[ScenarioConfig]) -> list[ScenarioResult]:
    limit = asyncio.Semaphore(config.MAX_WORKERS)

    async def one(cfg: ScenarioConfig) -> ScenarioResult:
        async with limit:
            return await asyncio.to_thread(run_scenario, cfg)

    return await asyncio.gather(*(one(cfg) for cfg in cfgs))


def cmd_run(spec: RunSpec) -> int:
    """One metrics CSV per (strategy, sweep value, seed) and one summary per (strategy, sweep value)."""
    base = load_scenario(spec.config_path)
    plan = list(itertools.product(spec.strategies, spec.sweep(), spec.seeds))
    cfgs = [scenario_variant(base, s, spec.axis, v, seed, spec.days) for s, v, seed in plan]

    storage = MetricsStorage(str(spec.output_dir))
    try:
        storage.ensure_writable()
    except OSError as e:
        raise ConfigError(f"output directory is not writable: {e}", field="out") from e

    logger.info("running %d scenario(s) with up to %d workers", len(cfgs), config.MAX_WORKERS)
    results = asyncio.run(_run_all(cfgs))

    groups: dict[tuple[Strategy, Optional[float]], list] = {}
    for (strategy, value, _), result in zip(plan, results):
        path = storage.save_metrics(result, spec.axis, value)
        logger.info("wrote %s", path)
        if result.notice:
            logger.warning("%s: %s", path.name, result.notice)
        groups.setdefault((strategy, value), []).append(result.summary)
    for (_, value), summaries in groups.items():
        logger.info("wrote %s", storage.save_summary(summaries, spec.axis, value))
    return 0


def compare_summaries(frames: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """Wide table: one row per sweep value, one `<metric>_<strategy>` column per pair."""
    if len(frames) < 2:
        raise ConfigError("compare needs at least two summaries", field="summaries")
    summaries = pd.concat(frames, ignore_index=True)
    axes = sorted(summaries["axis"].astype(str).unique())
    if len(axes) > 1:
        raise ConfigError(f"summaries sweep different axes: {', '.join(axes)}", field="axis")
    summaries["value"] = summaries["value"].fillna(-1.0) if axes == ["none"] else summaries["value"]
    duplicated = summaries.duplicated(["strategy", "value"])
    if duplicated.any():
        raise ConfigError("the same strategy and sweep value appears twice", field="summaries")

    table = summaries.pivot(index="value", columns="strategy",
                            values=[f"{m}_mean" for m in SUMMARY_METRICS])
    table.columns = [f"{metric[:-len('_mean')]}_{strategy}" for metric, strategy in table.columns]
    table = table.reset_index().sort_values("value", kind="stable")
    table.insert(0, "axis", axes[0])
    if axes == ["none"]:
        table["value"] = np.nan
    return table


def cmd_compare(summary_paths: Sequence[Path], output_dir: Path) -> int:
    frames = []
    for path in summary_paths:
        if not Path(path).is_file():
            raise ConfigError(f"summary not found: {path}", field="summaries")
        try:
            frames.append(load_summary(path))
        except ValueError as e:
            raise ConfigError(str(e), field="summaries") from e
    table = compare_summaries(frames)
    storage = MetricsStorage(str(output_dir))
    try:
        storage.ensure_writable()
    except OSError as e:
        raise ConfigError(f"output directory is not writable: {e}", field="out") from e
    path = storage.save_frame(table, "compare.csv")
    logger.info("wrote %s (%d rows)", path, len(table))
    return 0


def forecast_table(steps, horizon: int) -> pd.DataFrame:
    """Per step: t, mean_k, std_k, truth_k for k = 1..horizon, rmse and running rmse."""
    rows = []
    for step in steps:
        row = {"t": step.t}
        row.update({f"mean_{k + 1}": v for k, v in enumerate(step.forecast.mean)})
        row.update({f"std_{k + 1}": v for k, v in enumerate(step.forecast.std)})
        row.update({f"truth_{k + 1}": v for k, v in enumerate(step.truth)})
        row["rmse"] = step.rmse
        rows.append(row)
    columns = (["t"] + [f"{name}_{k}" for name in ("mean", "std", "truth") for k in range(1, horizon + 1)]
               + ["rmse"])
    table = pd.DataFrame(rows, columns=columns)
    table["running_rmse"] = table["rmse"].expanding().mean()
    return table


def cmd_forecast(spec: ForecastSpec) -> int:
    series = load_csv(spec.trace_path, spec.column, kind=spec.kind)
    if spec.normalize:
        series, scale = normalize(series)
        logger.info("normalized %s by its peak %.6g", spec.trace_path, scale)
    kernel = load_kernel(spec.kernel_path) if spec.kernel_path else default_kernel()
    if len(series) < spec.window + spec.horizon + 1:
        raise ConfigError(f"trace has {len(series)} points; need at least window + horizon + 1 = "
                          f"{spec.window + spec.horizon + 1}", field="trace")
    steps = rolling_forecast(series, kernel, spec.window, spec.horizon, refit_period=spec.refit_period)
    storage = MetricsStorage(str(spec.output_dir))
    try:
        storage.ensure_writable()
    except OSError as e:
        raise ConfigError(f"output directory is not writable: {e}", field="out") from e
    path = storage.save_frame(forecast_table(steps, spec.horizon), f"forecast_{Path(spec.trace_path).stem}.csv")
    print(f"steps={len(steps)} mean_rmse={mean_rmse(steps):.6g} file={path}")
    return 0
