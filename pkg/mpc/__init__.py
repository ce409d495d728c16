"""
MPC package - horizon QP construction, solving and the receding-horizon loop
"""

from .disturbance import DisturbanceForecast, expected_refill, make_disturbance
from .qp import (
    QpProblem, QpSolution, HorizonQp, ControlPlan, build_horizon_qp, kkt_residual, solve_qp, solve_horizon,
)
from .controller import HorizonState, RecedingHorizonController, mpc_step, reconstruct_states

__all__ = [
    'DisturbanceForecast', 'expected_refill', 'make_disturbance',
    'QpProblem', 'QpSolution', 'HorizonQp', 'ControlPlan', 'build_horizon_qp', 'kkt_residual', 'solve_qp',
    'solve_horizon',
    'HorizonState', 'RecedingHorizonController', 'mpc_step', 'reconstruct_states',
]
