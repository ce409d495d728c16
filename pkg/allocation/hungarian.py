"""
One-to-one source/consumer matching with the Hungarian method.
"""

from dataclasses import dataclass

import numpy as np

from allocation.convex import AllocationResult
from allocation.problem import AllocationProblem


@dataclass(frozen=True)
class CostMatrix:
    """Square cost matrix; rows >= n_rows and columns >= n_cols are padding."""
    matrix: np.ndarray
    n_rows: int
    n_cols: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def build_cost_matrix(problem: AllocationProblem) -> CostMatrix:
    """c_ij = beta (e_ij - d_j)^2 - (1 - beta) exp(1 / g_ij), padded with max(C)."""
    I, J = problem.shape
    if I < 1 or J < 1:
        raise ValueError("the cost matrix needs at least one source and one consumer")
    beta = problem.beta
    cost = beta * (problem.e - problem.d[None, :]) ** 2 - (1.0 - beta) * np.exp(1.0 / problem.hops)
    size = max(I, J)
    padded = np.full((size, size), cost.max())
    padded[:I, :J] = cost
    return CostMatrix(padded, I, J)


def _kuhn_munkres(cost: np.ndarray) -> np.ndarray:
    """Column assigned to each row of a square matrix, minimizing total cost.

    Shortest augmenting paths with row/column potentials, O(n^3). Columns are
    scanned in index order and ties resolve to the lowest index.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=int)  # match[j] = row (1-based) holding column j
    way = np.zeros(n + 1, dtype=int)
    for row in range(1, n + 1):
        match[0] = row
        j0 = 0
        min_slack = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = np.flatnonzero(~used[1:]) + 1
            reduced = cost[i0 - 1, free - 1] - u[i0] - v[free]
            better = reduced < min_slack[free]
            min_slack[free[better]] = reduced[better]
            way[free[better]] = j0
            j1 = free[np.argmin(min_slack[free])]
            delta = min_slack[j1]
            taken = np.flatnonzero(used)
            u[match[taken]] += delta
            v[taken] -= delta
            min_slack[free] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    assignment = np.empty(n, dtype=int)
    assignment[match[1:] - 1] = np.arange(n)
    return assignment


def solve_hungarian(costs) -> list[tuple[int, int]]:
    """Minimum-cost perfect matching, padded pairs dropped, sorted by row."""
    if isinstance(costs, CostMatrix):
        matrix, n_rows, n_cols = costs.matrix, costs.n_rows, costs.n_cols
    else:
        matrix = np.asarray(costs, dtype=float)
        n_rows, n_cols = matrix.shape if matrix.ndim == 2 else (0, 0)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("cost matrix must be finite")
    if matrix.size == 0:
        return []
    columns = _kuhn_munkres(matrix)
    return [(i, int(j)) for i, j in enumerate(columns) if i < n_rows and j < n_cols]


def assignment_to_allocation(assignment: list[tuple[int, int]], problem: AllocationProblem) -> np.ndarray:
    """Matched pairs ship min(1, d_j / e_ij) of their availability; nothing else moves."""
    y = np.zeros(problem.shape)
    for i, j in assignment:
        e = problem.available[i, j]
        y[i, j] = min(1.0, problem.demands[j] / e) if e > 0 else 0.0
    return y


def solve_matching(problem: AllocationProblem) -> AllocationResult:
    if problem.is_empty:
        return AllocationResult(np.zeros(problem.shape), 0.0, True, "hungarian")
    y = assignment_to_allocation(solve_hungarian(build_cost_matrix(problem)), problem)
    return AllocationResult(y, problem.objective(y), True, "hungarian")
