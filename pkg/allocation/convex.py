"""
Multi-source allocation by projected-gradient descent.

The sparsity reward -exp(y / g) is concave, so the program is not convex and a
single descent can stop in a local minimum. `solve_convex` therefore descends
from several starts (nothing allocated, uniform split, greedy demand fill and
the best points of a random feasible sample) and keeps the best result.
"""

import logging
from dataclasses import dataclass

import numpy as np

from allocation.problem import AllocationProblem, objective_batch

logger = logging.getLogger(__name__)

STATIONARITY_TOLERANCE = 1e-6
RANDOM_SAMPLES = 100_000
_BATCH = 10_000


@dataclass(frozen=True)
class AllocationResult:
    matrix: np.ndarray
    objective: float
    converged: bool
    method: str


def project_rows(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto {y >= 0, sum(y) <= 1}."""
    y = np.clip(v, 0.0, None)
    over = y.sum(axis=1) > 1.0
    if np.any(over):
        rows = v[over]
        s = -np.sort(-rows, axis=1)
        cumulative = np.cumsum(s, axis=1) - 1.0
        k = np.arange(1, rows.shape[1] + 1)
        rho = np.count_nonzero(s - cumulative / k > 0, axis=1)
        tau = cumulative[np.arange(len(rows)), rho - 1] / rho
        y[over] = np.clip(rows - tau[:, None], 0.0, None)
    return y


def stationarity(problem: AllocationProblem, y: np.ndarray) -> float:
    """Projected-gradient residual; zero exactly at first-order stationary points."""
    return float(np.max(np.abs(y - project_rows(y - problem.gradient(y))), initial=0.0))


def _descend(problem: AllocationProblem, y: np.ndarray, max_iter: int) -> tuple[np.ndarray, bool]:
    value = problem.objective(y)
    step = 1.0
    for _ in range(max_iter):
        grad = problem.gradient(y)
        while True:
            candidate = project_rows(y - step * grad)
            diff = candidate - y
            bound = value + np.sum(grad * diff) + np.sum(diff * diff) / (2.0 * step)
            new_value = problem.objective(candidate)
            if new_value <= bound + 1e-15 or step < 1e-12:
                break
            step *= 0.5
        if new_value > value:
            break
        y, value = candidate, new_value
        if np.max(np.abs(diff), initial=0.0) < 1e-12:
            break
        step = min(step * 2.0, 1e6)
    return y, stationarity(problem, y) <= STATIONARITY_TOLERANCE


def _greedy_fill(problem: AllocationProblem) -> np.ndarray:
    """Serve consumers in order from the closest sources until demand is met."""
    I, J = problem.shape
    y = np.zeros((I, J))
    left = np.ones(I)
    for j in range(J):
        need = problem.demands[j]
        for i in np.argsort(problem.hops[:, j], kind="stable"):
            if need <= 0:
                break
            e = problem.available[i, j]
            if e <= 0 or left[i] <= 0:
                continue
            take = min(left[i], need / e)
            y[i, j] = take
            left[i] -= take
            need -= take * e
    return y


def random_feasible(shape: tuple[int, int], count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` matrices with rows drawn uniformly from {y >= 0, sum(y) <= 1}."""
    I, J = shape
    return rng.dirichlet(np.ones(J + 1), size=(count, I))[..., :J]


def _sample_starts(problem: AllocationProblem, samples: int, keep: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    best_values = np.full(0, np.inf)
    best_points = np.zeros((0,) + problem.shape)
    remaining = samples
    while remaining > 0:
        batch = random_feasible(problem.shape, min(_BATCH, remaining), rng)
        remaining -= len(batch)
        values = np.concatenate([best_values, objective_batch(problem, batch)])
        points = np.concatenate([best_points, batch])
        order = np.argsort(values, kind="stable")[:keep]
        best_values, best_points = values[order], points[order]
    return list(best_points)


def solve_convex(problem: AllocationProblem, samples: int = RANDOM_SAMPLES, keep: int = 5,
                 max_iter: int = 5000, seed: int = 0) -> AllocationResult:
    """Best local minimum over the deterministic and sampled starts."""
    I, J = problem.shape
    if problem.is_empty:
        return AllocationResult(np.zeros((I, J)), 0.0, True, "convex")

    starts = [np.zeros((I, J)), np.full((I, J), 1.0 / J), _greedy_fill(problem)]
    if samples > 0:
        starts += _sample_starts(problem, samples, keep, seed)

    best, best_value, best_converged = None, np.inf, False
    for start in starts:
        y, converged = _descend(problem, project_rows(start), max_iter)
        value = problem.objective(y)
        if value < best_value - 1e-15:
            best, best_value, best_converged = y, value, converged
    if not best_converged:
        logger.warning("allocation descent hit the iteration limit (%d x %d problem)", I, J)
    return AllocationResult(best, best_value, best_converged, "convex")
