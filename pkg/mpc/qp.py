"""
Finite-horizon buffer-control QP.

Mean dynamics per BS:  z_{k+1} = z_k + u_k + w_k,  u > 0 means the BS receives.
The objective alpha * sum u^2 + (1 - alpha) * sum (z - B_ref)^2 is separable
across BSs, so every BS gets its own small QP over (u_0 .. u_{M-1}) plus slack
variables for softened state bounds. All energies are expressed in units of
B_max inside the QP.

Controls are bounded either by what the buffer holds (a BS can hand over
everything it has and take in up to B_max, checked right after each transfer)
or, with the "path" rule, by the gap to B_ref along the uncontrolled path.
"""

import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import cvxpy as cp
import numpy as np
from scipy.optimize import nnls

from mpc.disturbance import DisturbanceForecast
from utils.errors import SolverError
from utils.models import MpcConfig

logger = logging.getLogger(__name__)

KKT_TOLERANCE = 1e-6
FEASIBILITY_TOLERANCE = 1e-6
# Constraints closer than this (B_max units) count as active.
ACTIVE_TOLERANCE = 1e-7

# Tried in order; the second only when the first is missing or fails.
_SOLVERS = (
    ("CLARABEL", {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "tol_feas": 1e-10, "max_iter": 500}),
    ("OSQP", {"eps_abs": 1e-10, "eps_rel": 1e-10, "max_iter": 200_000, "polish": True}),
)


@dataclass(frozen=True)
class QpProblem:
    """minimize 0.5 x'Hx + f'x + constant  s.t.  G x <= h,  lower <= x <= upper.

    The first `n_controls` entries of x are the controls; the rest are slacks.
    """
    hessian: np.ndarray
    linear: np.ndarray
    constraint_matrix: np.ndarray
    constraint_bound: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_controls: int
    constant: float = 0.0
    label: str = ""

    @property
    def size(self) -> int:
        return len(self.linear)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.hessian @ x + self.linear @ x + self.constant)

    def violation(self, x) -> float:
        """Largest bound or inequality violation at x (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = max(0.0, float(np.max(self.lower - x)), float(np.max(x - self.upper)))
        if len(self.constraint_bound):
            worst = max(worst, float(np.max(self.constraint_matrix @ x - self.constraint_bound)))
        return worst

    def to_text(self) -> str:
        """Plain-text dump of every matrix and bound, readable by np.loadtxt per block."""
        out = io.StringIO()
        out.write(f"# qp {self.label} size={self.size} controls={self.n_controls} constant={self.constant!r}\n")
        for name, block in (("H", self.hessian), ("f", self.linear), ("G", self.constraint_matrix),
                            ("h", self.constraint_bound), ("lower", self.lower), ("upper", self.upper)):
            out.write(f"## {name} {' '.join(str(d) for d in np.shape(block))}\n")
            np.savetxt(out, np.atleast_2d(block), fmt="%.17g")
        return out.getvalue()


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    solver: str


@dataclass(frozen=True)
class HorizonQp:
    """One QpProblem per BS plus what is needed to map solutions back to joules."""
    problems: list[QpProblem]
    z0: np.ndarray
    disturbance: DisturbanceForecast
    scale: float
    softened: dict[int, tuple[str, ...]] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.disturbance.horizon

    def to_text(self) -> str:
        return "".join(p.to_text() for p in self.problems)


@dataclass(frozen=True)
class ControlPlan:
    """Solved transfers U (M x n_s, joules; u > 0 receive) and predicted mean states."""
    u: np.ndarray
    states: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    softened: dict[int, tuple[str, ...]]

    @property
    def first_action(self) -> np.ndarray:
        return self.u[0].copy()


def _reachable(z0: float, w: np.ndarray, umin: np.ndarray, umax: np.ndarray,
               floor: np.ndarray, ceiling: float, within: Optional[float] = None) -> bool:
    """Forward interval propagation of the 1-D state under the box constraints.

    With `within` set, the level after each transfer must also stay in [0, within].
    """
    lo = hi = z0
    for k in range(len(w)):
        lo, hi = lo + umin[k], hi + umax[k]
        if within is not None:
            lo, hi = max(lo, 0.0), min(hi, within)
        lo = max(lo + w[k], floor[k])
        hi = min(hi + w[k], ceiling)
        if lo > hi + 1e-12:
            return False
    return True


def _control_bounds(z0: float, offset: np.ndarray, ref: float, top: float,
                    rule: str) -> tuple[np.ndarray, np.ndarray]:
    M = len(offset)
    if rule == "buffer":
        # Slot 0 is fixed by the measured level; later slots go through the in-slot rows.
        umin = np.full(M, -np.inf)
        umax = np.full(M, np.inf)
        umin[0], umax[0] = -z0, top - z0
        return umin, umax
    # Reference gap along the uncontrolled path; k = 0 uses the measured level.
    path = np.clip(np.concatenate(([z0], offset[:-1])), 0.0, top)
    path[0] = z0
    return -np.maximum(0.0, path - ref), np.maximum(0.0, ref - path)


def _bs_problem(bs: int, z0: float, w: np.ndarray, var: np.ndarray, cfg: MpcConfig,
                scale: float) -> tuple[QpProblem, tuple[str, ...]]:
    M = len(w)
    alpha = cfg.alpha
    ref, low, top = cfg.b_ref / scale, cfg.b_low / scale, cfg.b_max / scale
    tril = np.tril(np.ones((M, M)))
    offset = z0 + np.cumsum(w)
    umin, umax = _control_bounds(z0, offset, ref, top, cfg.bounds)
    within = top if cfg.bounds == "buffer" else None

    floor = low + cfg.backoff * np.sqrt(np.cumsum(var)) / scale
    no_floor = np.full(M, -np.inf)
    soft = []
    if z0 < low or not _reachable(z0, w, umin, umax, floor, np.inf, within):
        soft.append("floor")
    if not _reachable(z0, w, umin, umax, no_floor, top, within):
        soft.append("ceiling")
    if not soft and not _reachable(z0, w, umin, umax, floor, top, within):
        soft.append("floor")

    n_slack = M * len(soft)
    n = M + n_slack
    penalty = cfg.soft_penalty * max(1.0 - alpha, 1e-6)

    H = np.zeros((n, n))
    H[:M, :M] = 2.0 * (alpha * np.eye(M) + (1.0 - alpha) * tril.T @ tril)
    H[M:, M:] = 2.0 * penalty * np.eye(n_slack)
    f = np.zeros(n)
    f[:M] = 2.0 * (1.0 - alpha) * tril.T @ (offset - ref)
    constant = float((1.0 - alpha) * np.sum((offset - ref) ** 2))

    ceiling_rows = np.hstack([tril, np.zeros((M, n_slack))])
    floor_rows = np.hstack([-tril, np.zeros((M, n_slack))])
    for i, kind in enumerate(soft):
        rows = ceiling_rows if kind == "ceiling" else floor_rows
        rows[:, M + i * M:M + (i + 1) * M] = -np.eye(M)
    blocks = [ceiling_rows, floor_rows]
    bounds = [top - offset, offset - floor]
    if within is not None and M > 1:
        # Level right after the transfer in slot k >= 1 stays in [0, B_max].
        before = offset[:-1]
        in_slot = np.hstack([tril[1:], np.zeros((M - 1, n_slack))])
        blocks += [in_slot, -in_slot]
        bounds += [top - before, before]
    G = np.vstack(blocks)
    h = np.concatenate(bounds)

    lower = np.concatenate([umin, np.zeros(n_slack)])
    upper = np.concatenate([umax, np.full(n_slack, np.inf)])
    problem = QpProblem(H, f, G, h, lower, upper, M, constant, label=f"bs{bs}")
    return problem, tuple(soft)


def build_horizon_qp(state0, dist: DisturbanceForecast, cfg: MpcConfig) -> HorizonQp:
    """Certainty-equivalent horizon problem for buffers `state0` (joules)."""
    z0 = np.asarray(state0, dtype=float).reshape(-1)
    if dist.horizon != cfg.horizon:
        raise ValueError(f"disturbance horizon {dist.horizon} does not match configured horizon {cfg.horizon}")
    if dist.n_bs != len(z0):
        raise ValueError(f"disturbance covers {dist.n_bs} BSs but {len(z0)} buffer levels were given")
    if np.any(z0 < 0) or np.any(z0 > cfg.b_max) or not np.all(np.isfinite(z0)):
        raise ValueError("initial buffer levels must lie in [0, b_max]")

    scale = cfg.b_max
    problems, softened = [], {}
    for bs in range(len(z0)):
        problem, soft = _bs_problem(bs, z0[bs] / scale, dist.mean[:, bs] / scale,
                                    dist.variance[:, bs], cfg, scale)
        problems.append(problem)
        if soft:
            softened[bs] = soft
            logger.debug("bs %d: softened %s bound(s) at z0=%.4g", bs, "/".join(soft), z0[bs])
    return HorizonQp(problems, z0 / scale, dist, scale, softened)


def _available_solvers() -> list[tuple[str, dict]]:
    installed = set(cp.installed_solvers())
    return [(name, opts) for name, opts in _SOLVERS if name in installed]


def _active_set(qp: QpProblem, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows a and bounds b of every constraint a'x <= b that is active at x."""
    eye = np.eye(qp.size)
    at_upper = np.isfinite(qp.upper) & (qp.upper - x <= ACTIVE_TOLERANCE)
    at_lower = np.isfinite(qp.lower) & (x - qp.lower <= ACTIVE_TOLERANCE)
    rows, bounds = [eye[at_upper], -eye[at_lower]], [qp.upper[at_upper], -qp.lower[at_lower]]
    if len(qp.constraint_bound):
        tight = qp.constraint_bound - qp.constraint_matrix @ x <= ACTIVE_TOLERANCE
        rows.append(qp.constraint_matrix[tight])
        bounds.append(qp.constraint_bound[tight])
    return np.vstack(rows), np.concatenate(bounds)


def kkt_residual(qp: QpProblem, x: np.ndarray) -> float:
    """
    Stationarity residual at a feasible x, scaled by max(1, |f|_inf).

    The multipliers are the non-negative least-squares fit of -grad on the
    active constraint rows, so complementarity and dual feasibility hold by
    construction and only the unexplained part of the gradient is left over.
    """
    x = np.asarray(x, dtype=float)
    grad = qp.hessian @ x + qp.linear
    rows, _ = _active_set(qp, x)
    if len(rows):
        multipliers, _ = nnls(rows.T, -grad)
        grad = grad + rows.T @ multipliers
    return float(np.max(np.abs(grad), initial=0.0) / max(1.0, float(np.max(np.abs(qp.linear), initial=0.0))))


def _polish(qp: QpProblem, x: np.ndarray) -> np.ndarray:
    """Minimizer with the constraints active at x held as equalities."""
    rows, bounds = _active_set(qp, x)
    n, m = qp.size, len(rows)
    kkt = np.block([[qp.hessian, rows.T], [rows, np.zeros((m, m))]])
    solution, *_ = np.linalg.lstsq(kkt, np.concatenate([-qp.linear, bounds]), rcond=None)
    return solution[:n]


def _refine(qp: QpProblem, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Keep the polished point when it is feasible and at least as stationary."""
    residual = kkt_residual(qp, x)
    if residual <= KKT_TOLERANCE * 1e-3:
        return x, residual
    try:
        polished = _polish(qp, x)
    except np.linalg.LinAlgError:
        return x, residual
    polished = np.clip(polished, qp.lower, qp.upper)
    if qp.violation(polished) <= FEASIBILITY_TOLERANCE * 1e-3:
        polished_residual = kkt_residual(qp, polished)
        if polished_residual <= residual and qp.objective(polished) <= qp.objective(x) + 1e-12:
            return polished, polished_residual
    return x, residual


def solve_qp(qp: QpProblem) -> QpSolution:
    x = cp.Variable(qp.size)
    lower_idx = np.flatnonzero(np.isfinite(qp.lower))
    upper_idx = np.flatnonzero(np.isfinite(qp.upper))
    constraints = []
    if len(qp.constraint_bound):
        constraints.append(qp.constraint_matrix @ x <= qp.constraint_bound)
    if len(lower_idx):
        constraints.append(x[lower_idx] >= qp.lower[lower_idx])
    if len(upper_idx):
        constraints.append(x[upper_idx] <= qp.upper[upper_idx])
    problem = cp.Problem(
        cp.Minimize(0.5 * cp.quad_form(x, cp.psd_wrap(qp.hessian)) + qp.linear @ x), constraints)

    best: Optional[np.ndarray] = None
    residual = float("nan")
    for name, opts in _available_solvers():
        try:
            problem.solve(solver=name, **opts)
        except cp.SolverError as e:
            logger.warning("%s failed on %s: %s; trying the next solver", name, qp.label, e)
            continue
        if x.value is None:
            logger.warning("%s returned status %s on %s", name, problem.status, qp.label)
            continue
        candidate = np.clip(np.asarray(x.value, dtype=float), qp.lower, qp.upper)
        if qp.violation(candidate) > FEASIBILITY_TOLERANCE:
            best, residual = candidate, float("nan")
            logger.warning("%s on %s: point violates the constraints by %.2e", name, qp.label,
                           qp.violation(candidate))
            continue
        candidate, residual = _refine(qp, candidate)
        best = candidate
        accurate = problem.status == cp.OPTIMAL or residual <= KKT_TOLERANCE
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and accurate:
            if residual > KKT_TOLERANCE:
                logger.warning("%s on %s: KKT residual %.2e above %.0e", name, qp.label, residual, KKT_TOLERANCE)
            iterations = int(problem.solver_stats.num_iters or 0)
            return QpSolution(candidate, qp.objective(candidate), iterations, residual, name)
        logger.warning("%s on %s ended with status %s", name, qp.label, problem.status)
    raise SolverError(f"no solver reached an optimal point for {qp.label}", best=best, residual=residual)


def solve_horizon(hqp: HorizonQp) -> ControlPlan:
    """Solve every per-BS problem and assemble the plan in joules."""
    M, n = hqp.horizon, len(hqp.problems)
    u = np.zeros((M, n))
    objective, iterations, residual = 0.0, 0, 0.0
    for bs, problem in enumerate(hqp.problems):
        try:
            solution = solve_qp(problem)
        except SolverError as e:
            if e.best is not None:
                partial = u.copy()
                partial[:, bs] = e.best[:M] * hqp.scale
                e.best = partial
            raise
        u[:, bs] = solution.x[:M] * hqp.scale
        objective += solution.objective
        iterations += solution.iterations
        residual = max(residual, solution.kkt_residual)
    states = hqp.z0 * hqp.scale + np.cumsum(u + hqp.disturbance.mean, axis=0)
    return ControlPlan(u, states, objective, iterations, residual, dict(hqp.softened))
