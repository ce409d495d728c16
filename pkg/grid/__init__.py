"""
Grid package - power packet grid topology, routing and transfers
"""

from .topology import (
    ROUTER, Route, PpgTopology, unique_route, attenuation,
    build_default_topology, load_edge_list, topology_from_config,
)
from .routing import (
    TransferJob, ScheduledJob, MiniSlotSchedule, required_minislots,
    schedule_transfers, find_link_conflicts, schedule_to_frame,
)
from .transfer import TransferRecord, TransferOutcome, apply_transfers, minislot_budget

__all__ = [
    'ROUTER', 'Route', 'PpgTopology', 'unique_route', 'attenuation',
    'build_default_topology', 'load_edge_list', 'topology_from_config',
    'TransferJob', 'ScheduledJob', 'MiniSlotSchedule', 'required_minislots',
    'schedule_transfers', 'find_link_conflicts', 'schedule_to_frame',
    'TransferRecord', 'TransferOutcome', 'apply_transfers', 'minislot_budget',
]
