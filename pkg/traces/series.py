"""
Uniformly slotted scalar series plus CSV ingestion and [0, 1] normalization.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import pandas as pd

from utils.errors import TraceError

SeriesKind = Literal["energy", "load"]


@dataclass(frozen=True)
class TimeSeries:
    """Hourly (by default) series of harvest, load or consumption values.

    Energy series are non-negative joules; load series are bandwidth fractions in [0, 1].
    The values array is read-only.
    """
    values: np.ndarray
    start_slot: int = 0
    step: float = 1.0
    kind: SeriesKind = "energy"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise TraceError("series values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise TraceError("series values must be finite")
        if np.any(values < 0):
            raise TraceError("series values must be non-negative")
        if self.kind == "load" and np.any(values > 1):
            raise TraceError("load values must lie in [0, 1]")
        if self.step <= 0:
            raise TraceError("step must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def window(self, start: int, stop: int) -> "TimeSeries":
        """Sub-series by position, keeping absolute slot numbering."""
        return TimeSeries(self.values[start:stop], self.start_slot + start, self.step, self.kind)

    def slots(self) -> np.ndarray:
        return self.start_slot + np.arange(len(self.values))

    def to_frame(self, name: str = "value") -> pd.DataFrame:
        return pd.DataFrame({"slot": self.slots(), name: self.values})


def load_csv(path: str | Path, column: Optional[str] = None, kind: SeriesKind = "energy") -> TimeSeries:
    """Read one numeric column (first column when `column` is None) from a headed CSV."""
    path = Path(path)
    if not path.is_file():
        raise TraceError(f"trace file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise TraceError(f"trace file is empty: {path}")
    if frame.empty:
        raise TraceError(f"trace file has no data rows: {path}")
    if column is None:
        column = frame.columns[0]
    elif column not in frame.columns:
        raise TraceError(f"column {column!r} not in {path} (have {', '.join(frame.columns)})")

    raw = frame[column]
    parsed = pd.to_numeric(raw.str.strip(), errors="coerce")
    bad = parsed.isna() | ~np.isfinite(parsed.fillna(0.0))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
        raise TraceError(f"malformed value {raw.iloc[row - 1]!r} in {path}", row=row)
    negative = parsed < 0
    if negative.any():
        row = int(np.flatnonzero(negative.to_numpy())[0]) + 1
        raise TraceError(f"negative value {parsed.iloc[row - 1]} in {path}", row=row)
    return TimeSeries(parsed.to_numpy(dtype=float), kind=kind)


def normalize(series: TimeSeries) -> tuple[TimeSeries, float]:
    """Scale into [0, 1] by the series maximum; returns the scale for `denormalize`."""
    if len(series) == 0:
        raise TraceError("cannot normalize an empty series")
    scale = float(series.values.max())
    if scale <= 0:
        raise TraceError("cannot normalize an all-zero series")
    return TimeSeries(series.values / scale, series.start_slot, series.step, series.kind), scale


def denormalize(series: TimeSeries, scale: float) -> TimeSeries:
    return TimeSeries(series.values * scale, series.start_slot, series.step, series.kind)
