"""
Allocation package - matching source offers to consumer demands
"""

from .problem import (
    AllocationProblem, build_problem, check_allocation, delivered_energy, sent_energy,
    problem_to_frames, allocation_to_frame, write_problem_csv,
)
from .convex import AllocationResult, solve_convex, project_rows, stationarity, random_feasible
from .hungarian import CostMatrix, build_cost_matrix, solve_hungarian, assignment_to_allocation, solve_matching

__all__ = [
    'AllocationProblem', 'build_problem', 'check_allocation', 'delivered_energy', 'sent_energy',
    'problem_to_frames', 'allocation_to_frame', 'write_problem_csv',
    'AllocationResult', 'solve_convex', 'project_rows', 'stationarity', 'random_feasible',
    'CostMatrix', 'build_cost_matrix', 'solve_hungarian', 'assignment_to_allocation', 'solve_matching',
]
