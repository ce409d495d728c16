"""
Request models for the command-line front-end.
"""

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from utils.models import Strategy

SweepAxis = Literal["none", "p", "eta"]


class RunSpec(BaseModel):
    """What `run` should execute: strategies x sweep values x seeds."""
    config_path: Optional[Path] = Field(default=None, description="Scenario JSON; defaults when omitted")
    output_dir: Path = Field(..., description="Where metric and summary CSVs are written")
    axis: SweepAxis = "none"
    values: list[float] = Field(default_factory=list)
    strategies: list[Strategy] = Field(..., min_length=1)
    seeds: list[int] = Field(..., min_length=1)
    days: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _sweep_values(self) -> "RunSpec":
        if self.axis != "none" and not self.values:
            raise ValueError(f"sweep over {self.axis} needs at least one value")
        if self.axis == "none" and self.values:
            raise ValueError("sweep values given without a sweep axis")
        return self

    def sweep(self) -> list[Optional[float]]:
        return list(self.values) if self.axis != "none" else [None]


class ForecastSpec(BaseModel):
    """What `forecast` should execute on one trace."""
    trace_path: Path
    column: Optional[str] = None
    kind: Literal["energy", "load"] = "energy"
    kernel_path: Optional[Path] = None
    output_dir: Path
    window: int = Field(default=336, ge=2)
    horizon: int = Field(default=24, ge=1)
    refit_period: Optional[int] = Field(default=None, ge=1)
    normalize: bool = True
