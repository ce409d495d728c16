"""
Configuration and result models.
Defines Pydantic models for scenario configuration files and for the per-slot and aggregate metrics.
"""

import math
import uuid
from datetime import datetime
from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SECONDS_PER_HOUR = 3600.0


class Strategy(str, Enum):
    """Energy-exchange schemes compared by the simulator."""
    NOEE = "NOEE"
    CONV = "CONV"
    HUNG = "HUNG"
    GPS_MPC_CONV = "GPS_MPC_CONV"
    GPS_MPC_HUNG = "GPS_MPC_HUNG"

    @property
    def uses_forecasts(self) -> bool:
        return self in (Strategy.GPS_MPC_CONV, Strategy.GPS_MPC_HUNG)

    @property
    def allocator(self) -> Optional[str]:
        if self is Strategy.NOEE:
            return None
        return "hungarian" if self in (Strategy.HUNG, Strategy.GPS_MPC_HUNG) else "convex"


class ConsumptionModel(BaseModel):
    """Linear BS power model: O(L) = (base_power + load_slope * L) * slot duration."""
    model_config = ConfigDict(frozen=True)

    base_power: float = Field(default=100.0, ge=0, description="Idle drain in watts")
    load_slope: float = Field(default=200.0, ge=0, description="Watts per unit of load")
    slot_duration: float = Field(default=1.0, gt=0, description="Slot length in hours")

    @property
    def slot_seconds(self) -> float:
        return self.slot_duration * SECONDS_PER_HOUR

    def energy(self, load):
        """Joules drained in one slot at the given load (scalar or array)."""
        return (self.base_power + self.load_slope * np.asarray(load, dtype=float)) * self.slot_seconds

    def full_load_daily_energy(self) -> float:
        slots_per_day = 24.0 / self.slot_duration
        return float(self.energy(1.0)) * slots_per_day


# Hourly templates shaped after the two measured load classes: a heavy
# business-hours cluster and a light residential one.
HEAVY_LOAD_TEMPLATE = [
    0.22, 0.16, 0.12, 0.10, 0.10, 0.12, 0.20, 0.34, 0.52, 0.66, 0.74, 0.78,
    0.80, 0.80, 0.78, 0.78, 0.80, 0.84, 0.88, 0.90, 0.86, 0.72, 0.52, 0.34,
]
LIGHT_LOAD_TEMPLATE = [
    0.08, 0.06, 0.05, 0.04, 0.04, 0.05, 0.07, 0.11, 0.16, 0.20, 0.22, 0.24,
    0.25, 0.25, 0.24, 0.24, 0.25, 0.27, 0.30, 0.32, 0.30, 0.24, 0.16, 0.11,
]


class ClusterProfiles(BaseModel):
    """Two daily load templates; cluster 2 (light) is drawn with probability p."""
    model_config = ConfigDict(frozen=True)

    cluster1: list[float] = Field(default_factory=lambda: list(HEAVY_LOAD_TEMPLATE))
    cluster2: list[float] = Field(default_factory=lambda: list(LIGHT_LOAD_TEMPLATE))
    p: float = Field(default=0.5, ge=0, le=1)
    jitter: float = Field(default=0.0, ge=0, description="Std of per-hour gaussian jitter")

    @field_validator("cluster1", "cluster2")
    @classmethod
    def _check_template(cls, values: list[float]) -> list[float]:
        if len(values) != 24:
            raise ValueError(f"template needs 24 hourly values, got {len(values)}")
        if any(not (0.0 <= v <= 1.0) for v in values):
            raise ValueError("template values must lie in [0, 1]")
        return values

    @model_validator(mode="after")
    def _heavy_first(self) -> "ClusterProfiles":
        if sum(self.cluster1) < sum(self.cluster2):
            raise ValueError("cluster1 must be the heavier daily profile")
        return self


class SolarSettings(BaseModel):
    """Synthetic harvest generator parameters."""
    peak_joules: float = Field(default=150e3, gt=0)
    noise_scale: float = Field(default=0.2, ge=0)
    sunrise: int = Field(default=6, ge=0, le=23)
    sunset: int = Field(default=18, ge=1, le=24)

    @model_validator(mode="after")
    def _day_ordering(self) -> "SolarSettings":
        if self.sunrise >= self.sunset:
            raise ValueError("sunrise must precede sunset")
        return self


class Thresholds(BaseModel):
    """Energy buffer capacity and thresholds, as fractions of b_max."""
    b_max: float = Field(default=360e3, gt=0)
    up: float = Field(default=0.7, gt=0, lt=1)
    ref: float = Field(default=0.5, gt=0, lt=1)
    low: float = Field(default=0.1, gt=0, lt=1)

    @model_validator(mode="after")
    def _ordering(self) -> "Thresholds":
        if not (self.low < self.ref < self.up):
            raise ValueError("thresholds must satisfy 0 < low < ref < up < 1")
        return self

    @property
    def b_up(self) -> float:
        return self.up * self.b_max

    @property
    def b_ref(self) -> float:
        return self.ref * self.b_max

    @property
    def b_low(self) -> float:
        return self.low * self.b_max


class GridConfig(BaseModel):
    """Power packet grid physics and the default tree shape."""
    hop_length: float = Field(default=100.0, gt=0, description="meters")
    resistivity: float = Field(default=0.023, gt=0, description="ohm mm^2 / m")
    cross_section: float = Field(default=10.0, gt=0, description="mm^2")
    v_nominal: float = Field(default=400.0, gt=0, description="volts DC")
    p_nominal: float = Field(default=1500.0, gt=0, description="watts")
    e_max: float = Field(default=90e3, gt=0, description="joules per mini-slot")
    minislot_seconds: float = Field(default=60.0, gt=0)
    branches: int = Field(default=3, ge=1)
    edge_list: Optional[str] = Field(default=None, description="Topology file; overrides branches")

    @property
    def hop_resistance(self) -> float:
        return self.resistivity * self.hop_length / self.cross_section

    @property
    def loss_per_hop(self) -> float:
        return self.p_nominal * self.hop_resistance / self.v_nominal ** 2


class MpcConfig(BaseModel):
    """Receding-horizon controller settings (energies in joules)."""
    horizon: int = Field(default=24, ge=1)
    alpha: float = Field(default=0.5, ge=0, le=1)
    b_ref: float = Field(default=180e3, gt=0)
    b_low: float = Field(default=36e3, gt=0)
    b_max: float = Field(default=360e3, gt=0)
    backoff: float = Field(default=0.0, ge=0, description="Chance-constraint back-off multiplier c")
    soft_penalty: float = Field(default=1e3, ge=0)
    bounds: Literal["buffer", "path"] = Field(
        default="buffer",
        description="Control bounds: what the buffer holds, or the gap to b_ref along the uncontrolled path")

    @model_validator(mode="after")
    def _ordering(self) -> "MpcConfig":
        if not (0 < self.b_low < self.b_ref < self.b_max):
            raise ValueError("need 0 < b_low < b_ref < b_max")
        return self

    @classmethod
    def from_thresholds(cls, thresholds: Thresholds, **kwargs) -> "MpcConfig":
        return cls(b_ref=thresholds.b_ref, b_low=thresholds.b_low, b_max=thresholds.b_max, **kwargs)


class GpSettings(BaseModel):
    """Forecasting settings used by the predictive strategies."""
    window: int = Field(default=168, ge=2, description="Training window N in slots")
    refit_period: Optional[int] = Field(default=None, ge=1, description="S; None keeps the pre-trained hyperparameters")
    grid: list[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0])
    noise_std: float = Field(default=1e-5, gt=0)
    kernel_path: Optional[str] = Field(default=None, description="Kernel expression JSON; default is RQ x SP")

    @field_validator("grid")
    @classmethod
    def _grid_range(cls, values: list[float]) -> list[float]:
        if not values or any(not (1e-2 <= v <= 1e2) for v in values):
            raise ValueError("grid values must be non-empty and within [1e-2, 1e2]")
        return values


class TraceSource(BaseModel):
    """Recorded traces for one BS, replacing the generators."""
    harvest_path: str
    load_path: str
    harvest_column: Optional[str] = None
    load_column: Optional[str] = None


class ScenarioConfig(BaseModel):
    """Everything a scenario run needs; loadable from JSON."""
    n_bs: int = Field(default=18, ge=1)
    ongrid: list[int] = Field(default_factory=lambda: [0, 1, 6, 7, 12, 13])
    strategy: Strategy = Strategy.CONV
    p: float = Field(default=0.5, ge=0, le=1)
    eta: float = Field(default=math.inf, gt=0, description="Daily purchase cap as a fraction of full-load consumption")
    horizon: int = Field(default=24, ge=1)
    alpha: float = Field(default=0.5, ge=0, le=1)
    beta: float = Field(default=0.5, ge=0, le=1)
    backoff: float = Field(default=0.0, ge=0)
    control_bounds: Literal["buffer", "path"] = "buffer"
    model_refill: bool = Field(default=True, description="Feed expected ongrid top-ups into the MPC disturbance")
    days: int = Field(default=7, ge=0)
    seed: int = 1
    initial_buffer: float = Field(default=0.5, ge=0, le=1, description="Fraction of b_max at slot 0")
    thresholds: Thresholds = Field(default_factory=Thresholds)
    grid: GridConfig = Field(default_factory=GridConfig)
    solar: SolarSettings = Field(default_factory=SolarSettings)
    profiles: ClusterProfiles = Field(default_factory=ClusterProfiles)
    consumption: ConsumptionModel = Field(
        default_factory=lambda: ConsumptionModel(base_power=5.0, load_slope=15.0))
    gp: GpSettings = Field(default_factory=GpSettings)
    trace_files: dict[int, TraceSource] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_sets(self) -> "ScenarioConfig":
        if len(set(self.ongrid)) != len(self.ongrid):
            raise ValueError("ongrid ids must be unique")
        if len(self.ongrid) > self.n_bs:
            raise ValueError("more ongrid BSs than BSs")
        bad = [n for n in self.ongrid if not 0 <= n < self.n_bs]
        if bad:
            raise ValueError(f"ongrid ids out of range: {bad}")
        bad = [n for n in self.trace_files if not 0 <= n < self.n_bs]
        if bad:
            raise ValueError(f"trace_files ids out of range: {bad}")
        return self

    @property
    def slots_per_day(self) -> int:
        return int(round(24.0 / self.consumption.slot_duration))

    @property
    def warmup_slots(self) -> int:
        """GP history before the first simulated slot, rounded up to whole days."""
        if not self.strategy.uses_forecasts:
            return 0
        per_day = self.slots_per_day
        return -(-self.gp.window // per_day) * per_day

    def cluster_profiles(self) -> ClusterProfiles:
        return self.profiles.model_copy(update={"p": self.p})

    def mpc_config(self) -> MpcConfig:
        return MpcConfig.from_thresholds(
            self.thresholds, horizon=self.horizon, alpha=self.alpha, backoff=self.backoff,
            bounds=self.control_bounds)


class SlotMetrics(BaseModel):
    """Metrics for one simulated slot (energies in joules, network totals)."""
    slot: int
    gamma: float = Field(ge=0, le=1)
    mean_buffer: float
    harvested: float
    consumed: float
    purchased: float
    sent: float
    delivered: float
    lost: float
    wasted: float
    unserved: float
    delta_buffer: float
    truncated_jobs: int = 0
    rmse_h: Optional[float] = None
    rmse_l: Optional[float] = None


class RunMetadata(BaseModel):
    """Metadata for one scenario execution."""
    timestamp: datetime = Field(default_factory=datetime.now)
    run_id: str = Field(default_factory=lambda: str(uuid.uuid4()))
    execution_time_seconds: Optional[float] = None
    status: str = "completed"


class ScenarioSummary(BaseModel):
    """Aggregate metrics of one run."""
    strategy: Strategy
    p: float
    eta: float
    seed: int
    slots: int
    mean_gamma: float
    max_gamma: float
    mean_buffer: float
    total_purchased: float
    total_sent: float
    total_delivered: float
    total_lost: float
    total_wasted: float
    total_unserved: float
    mean_rmse_h: Optional[float] = None
    mean_rmse_l: Optional[float] = None


class ScenarioResult(BaseModel):
    slots: list[SlotMetrics]
    purchased_per_bs: list[float]
    clusters: list[int]
    summary: ScenarioSummary
    metadata: RunMetadata
    notice: Optional[str] = None
