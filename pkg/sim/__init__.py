"""
Sim package - slotted-time scenario simulation
"""

from .state import BsState, BufferUpdate, PurchaseCap, buffer_update, grid_purchase, myopic_actions, outage_probability
from .scenario import build_states, required_slots
from .strategies import route_strategy, NoExchangePolicy, MyopicPolicy, PredictivePolicy
from .workflow import ScenarioWorkflow, run_slot, run_scenario, summarize

__all__ = [
    'BsState', 'BufferUpdate', 'PurchaseCap', 'buffer_update', 'grid_purchase', 'myopic_actions',
    'outage_probability', 'build_states', 'required_slots',
    'route_strategy', 'NoExchangePolicy', 'MyopicPolicy', 'PredictivePolicy',
    'ScenarioWorkflow', 'run_slot', 'run_scenario', 'summarize',
]
