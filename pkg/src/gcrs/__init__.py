"""Global cognitive radio: time-zone driven spectrum leasing and its simulator."""

from .spectrum import (DowntimeWindow, FrequencyBand, Region, bands_overlap, convert_time,
                       is_downtime)
from .scenario import ScenarioConfig, ScenarioError, load_scenario
from .engine import Simulation, run_simulation
from .metrics import MetricsReport, compute_metrics

__version__ = "0.1.0"

__all__ = [
    "DowntimeWindow", "FrequencyBand", "Region", "bands_overlap", "convert_time", "is_downtime",
    "ScenarioConfig", "ScenarioError", "load_scenario", "Simulation", "run_simulation",
    "MetricsReport", "compute_metrics",
]
