"""
Exact zero-mean Gaussian-process regression.

The training covariance K + sigma_n^2 I is factorized once per model (Cholesky);
when it is numerically indefinite the factorization is retried with extra
diagonal variance 1e-8, 1e-6, 1e-4 before giving up.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from gp.kernels import (
    Hyper, KernelExpr, ProductKernel, SumKernel, get_params, kernel_matrix, trainable, with_params,
)
from utils.errors import FitError, KernelError, NotPositiveDefiniteError

logger = logging.getLogger(__name__)

JITTER_STEPS = (0.0, 1e-8, 1e-6, 1e-4)
DEFAULT_NOISE_STD = 1e-5
LOG_BOUNDS = (math.log(1e-3), math.log(1e3))
_FAILED = 1e30


@dataclass(frozen=True)
class Forecast:
    """Predictive mean and covariance over the test inputs."""
    mean: np.ndarray
    covariance: np.ndarray
    inputs: np.ndarray

    @property
    def horizon_slots(self) -> int:
        return len(self.mean)

    @property
    def variance(self) -> np.ndarray:
        return np.clip(np.diag(self.covariance), 0.0, None)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def affine(self, scale: float, offset: float = 0.0) -> "Forecast":
        """Forecast of scale * f + offset."""
        return Forecast(self.mean * scale + offset, self.covariance * scale * scale, self.inputs)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"slot": self.inputs, "mean": self.mean, "std": self.std})


def gram(k: KernelExpr, xs: np.ndarray, noise_std: float) -> np.ndarray:
    """K_ij = k(x_i, x_j) + noise_std^2 * [i == j]."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    if xs.size == 0:
        raise ValueError("gram needs at least one input")
    K = kernel_matrix(k, xs, xs)
    K = 0.5 * (K + K.T)
    K[np.diag_indices_from(K)] += noise_std ** 2
    return K


def _cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    for extra in JITTER_STEPS:
        try:
            L = linalg.cholesky(K + extra * np.eye(len(K)) if extra else K, lower=True)
        except linalg.LinAlgError:
            continue
        if extra:
            logger.debug("covariance needed %.0e extra variance to factorize", extra)
        return L, extra
    raise NotPositiveDefiniteError(
        f"covariance is not positive definite even with {JITTER_STEPS[-1]:.0e} jitter; "
        "use a larger noise_std")


@dataclass(frozen=True)
class _Factor:
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float


@dataclass(frozen=True)
class GpModel:
    """Training data plus kernel; immutable, so the factorization is cached."""
    kernel: KernelExpr
    inputs: np.ndarray
    targets: np.ndarray
    noise_std: float = DEFAULT_NOISE_STD

    def __post_init__(self):
        x = np.array(self.inputs, dtype=float).reshape(-1)
        y = np.array(self.targets, dtype=float).reshape(-1)
        if x.size < 1:
            raise ValueError("a GP needs at least one training point")
        if x.size != y.size:
            raise ValueError(f"inputs ({x.size}) and targets ({y.size}) differ in length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("training inputs must be strictly increasing")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    @cached_property
    def factor(self) -> _Factor:
        L, extra = _cholesky(gram(self.kernel, self.inputs, self.noise_std))
        alpha = linalg.cho_solve((L, True), self.targets)
        return _Factor(L, alpha, extra)

    def with_kernel(self, kernel: KernelExpr) -> "GpModel":
        return GpModel(kernel, self.inputs, self.targets, self.noise_std)


def log_marginal_likelihood(model: GpModel) -> float:
    """log N(r; 0, K + sigma_n^2 I) via the Cholesky factor."""
    f = model.factor
    n = len(model.targets)
    return float(-0.5 * model.targets @ f.alpha
                 - np.sum(np.log(np.diag(f.chol)))
                 - 0.5 * n * math.log(2.0 * math.pi))


def predict(model: GpModel, test_inputs) -> Forecast:
    """Posterior of the latent function at the test inputs."""
    xs = np.asarray(test_inputs, dtype=float).reshape(-1)
    f = model.factor
    Ks = kernel_matrix(model.kernel, model.inputs, xs)
    Kss = kernel_matrix(model.kernel, xs, xs)
    mean = Ks.T @ f.alpha
    v = linalg.solve_triangular(f.chol, Ks, lower=True)
    cov = Kss - v.T @ v
    cov = 0.5 * (cov + cov.T)
    diag = np.diag(cov).copy()
    diag[(diag < 0) & (diag >= -1e-8)] = 0.0
    cov[np.diag_indices_from(cov)] = diag
    return Forecast(mean, cov, xs)


def _neg_lml(model: GpModel, log_theta: np.ndarray) -> float:
    try:
        return -log_marginal_likelihood(model.with_kernel(with_params(model.kernel, np.exp(log_theta))))
    except (NotPositiveDefiniteError, KernelError):
        return _FAILED


def _flattened(k: KernelExpr) -> KernelExpr:
    """`k` with every trainable lengthscale at its upper bound, i.e. nearly constant."""
    if isinstance(k, (SumKernel, ProductKernel)):
        attr = "terms" if isinstance(k, SumKernel) else "factors"
        return k.model_copy(update={attr: [_flattened(c) for c in getattr(k, attr)]})
    ell = getattr(k, "lengthscale", None)
    if ell is None or not ell.trainable:
        return k
    return k.model_copy(update={"lengthscale": Hyper(value=math.exp(LOG_BOUNDS[1]), trainable=True)})


def _component_starts(model: GpModel, grid: Sequence[float], refine: bool, max_evals: int) -> list[np.ndarray]:
    """
    Starts for a composite kernel built from its children fitted on their own.

    Besides all fitted children together, a product also gets one start per
    child where the other factors are flattened, so the composite begins at
    that child's own optimum.
    """
    k = model.kernel
    if not isinstance(k, (SumKernel, ProductKernel)):
        return []
    attr = "terms" if isinstance(k, SumKernel) else "factors"
    children = getattr(k, attr)
    if len(children) < 2:
        return []
    fitted = []
    for child in children:
        try:
            fitted.append(fit(model.with_kernel(child), grid, refine, max_evals).kernel
                          if trainable(child) else child)
        except FitError:
            return []

    composites = [k.model_copy(update={attr: fitted})]
    if isinstance(k, ProductKernel):
        for i, child in enumerate(fitted):
            if trainable(child):
                others = [c if j == i else _flattened(c) for j, c in enumerate(fitted)]
                composites.append(k.model_copy(update={attr: others}))
    return [get_params(c) for c in composites]


def fit(model: GpModel, grid: Optional[Sequence[float]] = None, refine: bool = True,
        max_evals: int = 200) -> GpModel:
    """Maximize the log marginal likelihood over the trainable hyperparameters.

    Every combination of `grid` values (one axis per trainable hyperparameter) is
    scored; `grid=None` scores only the current values. Sums and products also
    start from their children fitted separately. The best point is then
    refined by Powell's derivative-free search in log space. Deterministic.
    """
    n = len(trainable(model.kernel))
    if n == 0:
        return model
    if grid is None:
        starts = [get_params(model.kernel)]
    else:
        starts = [np.array(c, dtype=float) for c in itertools.product(grid, repeat=n)]
        starts += _component_starts(model, grid, refine, max_evals)

    best_theta, best_value = None, math.inf
    for theta in starts:
        value = _neg_lml(model, np.log(theta))
        if value < min(best_value, _FAILED):
            best_theta, best_value = theta, value
    if best_theta is None:
        raise FitError(f"all {len(starts)} hyperparameter candidates gave a non-PD covariance")

    if refine:
        result = optimize.minimize(
            lambda z: _neg_lml(model, z),
            np.clip(np.log(best_theta), *LOG_BOUNDS),
            method="Powell",
            bounds=[LOG_BOUNDS] * n,
            options={"xtol": 1e-3, "ftol": 1e-9, "maxfev": max_evals * n},
        )
        if result.fun < best_value:
            best_theta, best_value = np.exp(result.x), float(result.fun)

    logger.debug("fitted %d hyperparameters, -lml=%.6g", n, best_value)
    return model.with_kernel(with_params(model.kernel, best_theta))
