"""
Traces package - exogenous harvest, load and consumption inputs
"""

from .series import TimeSeries, load_csv, normalize, denormalize
from .generators import gen_solar_trace, gen_traffic_trace, consumption, solar_day_shape

__all__ = [
    'TimeSeries', 'load_csv', 'normalize', 'denormalize',
    'gen_solar_trace', 'gen_traffic_trace', 'consumption', 'solar_day_shape',
]
