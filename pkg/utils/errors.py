"""
Exception hierarchy shared by every package.
All failures raised on purpose derive from PpgError so the CLI can map them to an exit status.
"""

from typing import Optional

import numpy as np


class PpgError(Exception):
    """Base class for simulator errors."""


class ConfigError(PpgError, ValueError):
    """Invalid configuration; `field` names the offending entry when known."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class TraceError(PpgError, ValueError):
    """Bad trace input; `row` is the 1-based data row when the error is row-specific."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class KernelError(PpgError, ValueError):
    """Invalid hyperparameters or a non-finite kernel value."""


class NotPositiveDefiniteError(PpgError):
    """Covariance factorization failed even after jitter escalation."""


class FitError(PpgError):
    """No hyperparameter candidate produced a usable model."""


class ForecastError(PpgError):
    """Rolling forecast failure at a given slot."""

    def __init__(self, message: str, slot: int):
        self.slot = slot
        super().__init__(f"slot {slot}: {message}")


class SolverError(PpgError):
    """Optimizer stopped without meeting its contract; keeps the best iterate seen."""

    def __init__(self, message: str, best: Optional[np.ndarray] = None, residual: float = float("nan")):
        self.best = best
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class TopologyError(PpgError, ValueError):
    """Unknown node, malformed edge list or unusable loss parameters."""


class ScenarioError(PpgError):
    """Failure while simulating a slot."""

    def __init__(self, message: str, slot: int):
        self.slot = slot
        super().__init__(f"slot {slot}: {message}")
