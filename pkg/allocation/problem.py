"""
Source/consumer matching problem for one slot.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from grid.topology import PpgTopology, attenuation, unique_route


@dataclass(frozen=True)
class AllocationProblem:
    """
    Offers from I sources and demands from J consumers (joules).

    hops[i, j] is the route length g_ij and available[i, j] = offer_i * a(g_ij).
    `scale` (B_max) converts energies to the dimensionless units the
    objectives are evaluated in.
    """
    source_ids: np.ndarray
    offers: np.ndarray
    consumer_ids: np.ndarray
    demands: np.ndarray
    hops: np.ndarray
    available: np.ndarray
    beta: float
    scale: float = 1.0

    def __post_init__(self):
        I, J = len(self.source_ids), len(self.consumer_ids)
        if self.hops.shape != (I, J) or self.available.shape != (I, J):
            raise ValueError(f"hops {self.hops.shape} and availability {self.available.shape} must be ({I}, {J})")
        if len(self.offers) != I or len(self.demands) != J:
            raise ValueError("offers/demands do not match the id lists")
        if np.any(self.hops < 1):
            raise ValueError("every source/consumer pair needs at least one hop")
        if np.any(self.offers < 0) or np.any(self.demands < 0):
            raise ValueError("offers and demands must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.source_ids), len(self.consumer_ids)

    @property
    def is_empty(self) -> bool:
        return 0 in self.shape

    @property
    def e(self) -> np.ndarray:
        return self.available / self.scale

    @property
    def d(self) -> np.ndarray:
        return self.demands / self.scale

    def objective(self, y: np.ndarray) -> float:
        """beta * sum_j (sum_i y e - d)^2 + (1 - beta) * sum -exp(y / g), in B_max units."""
        return float(objective_batch(self, np.asarray(y, dtype=float)[None])[0])

    def gradient(self, y: np.ndarray) -> np.ndarray:
        e, d = self.e, self.d
        mismatch = np.sum(y * e, axis=0) - d
        return 2.0 * self.beta * mismatch[None, :] * e - (1.0 - self.beta) * np.exp(y / self.hops) / self.hops


def objective_batch(problem: AllocationProblem, ys: np.ndarray) -> np.ndarray:
    """Objective for a stack of candidate matrices, shape (K, I, J)."""
    e, d, g = problem.e, problem.d, problem.hops
    mismatch = np.einsum("kij,ij->kj", ys, e) - d
    return (problem.beta * np.sum(mismatch ** 2, axis=1)
            - (1.0 - problem.beta) * np.sum(np.exp(ys / g), axis=(1, 2)))


def build_problem(actions, topo: PpgTopology, beta: float, scale: float = 1.0) -> AllocationProblem:
    """Split per-BS amounts into sources (u < 0) and consumers (u > 0); zeros sit out."""
    u = np.asarray(actions, dtype=float).reshape(-1)
    if len(u) != topo.n_bs:
        raise ValueError(f"{len(u)} actions for a grid of {topo.n_bs} BSs")
    sources = np.flatnonzero(u < 0)
    consumers = np.flatnonzero(u > 0)
    hops = np.ones((len(sources), len(consumers)), dtype=int)
    for a, i in enumerate(sources):
        for b, j in enumerate(consumers):
            hops[a, b] = unique_route(topo, int(i), int(j)).hop_count
    offers = -u[sources]
    fractions = np.array([[attenuation(topo, int(g)) for g in row] for row in hops],
                         dtype=float).reshape(hops.shape)
    return AllocationProblem(sources, offers, consumers, u[consumers], hops,
                             offers[:, None] * fractions, beta, scale)


def check_allocation(y: np.ndarray, tol: float = 1e-9) -> bool:
    """0 <= y <= 1 and every row sums to at most 1."""
    y = np.asarray(y, dtype=float)
    return bool(np.all(y >= -tol) and np.all(y <= 1 + tol) and np.all(y.sum(axis=1) <= 1 + tol))


def delivered_energy(y: np.ndarray, problem: AllocationProblem) -> np.ndarray:
    """Energy arriving at each consumer (joules)."""
    return np.sum(np.asarray(y) * problem.available, axis=0)


def sent_energy(y: np.ndarray, problem: AllocationProblem) -> np.ndarray:
    """Energy leaving the source for each pair (joules)."""
    return np.asarray(y) * problem.offers[:, None]


def problem_to_frames(problem: AllocationProblem) -> dict[str, pd.DataFrame]:
    index = pd.Index(problem.source_ids, name="source")
    columns = pd.Index(problem.consumer_ids, name="consumer")
    return {
        "hops": pd.DataFrame(problem.hops, index=index, columns=columns),
        "available": pd.DataFrame(problem.available, index=index, columns=columns),
        "offers": pd.DataFrame({"offer": problem.offers}, index=index),
        "demands": pd.DataFrame({"demand": problem.demands}, index=columns),
    }


def allocation_to_frame(y: np.ndarray, problem: AllocationProblem) -> pd.DataFrame:
    return pd.DataFrame(y, index=pd.Index(problem.source_ids, name="source"),
                        columns=pd.Index(problem.consumer_ids, name="consumer"))


def write_problem_csv(problem: AllocationProblem, directory: str | Path, y=None) -> list[Path]:
    """Dump the problem matrices (and optionally a solution) as CSV for inspection."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frames = problem_to_frames(problem)
    if y is not None:
        frames["allocation"] = allocation_to_frame(y, problem)
    written = []
    for name, frame in frames.items():
        path = directory / f"{name}.csv"
        frame.to_csv(path)
        written.append(path)
    return written
