"""
CLI package - batch front-end for scenarios, comparisons and forecasts
"""

from .commands import cmd_run, cmd_compare, cmd_forecast, compare_summaries, forecast_table, load_scenario
from .models import RunSpec, ForecastSpec
from .main import main, build_parser

__all__ = [
    'cmd_run', 'cmd_compare', 'cmd_forecast', 'compare_summaries', 'forecast_table', 'load_scenario',
    'RunSpec', 'ForecastSpec', 'main', 'build_parser',
]
