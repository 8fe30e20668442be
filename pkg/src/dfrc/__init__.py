"""Transmit precoder design for dual-function radar-communication arrays."""

from .array_model import AngleGrid, ArrayGeometry, DomainError
from .design_guarantee import DesignReport, comm_guarantee, radar_guarantee
from .design_priority import priority_combinatorial, priority_greedy, radar_priority
from .link_metrics import Precoder, RadarSpec, SecondaryNode
from .prior_baselines import mse_design, zf_design
from .scenario_io import Scenario, load_scenario

__all__ = [
    "AngleGrid", "ArrayGeometry", "DomainError", "DesignReport", "Precoder", "RadarSpec",
    "Scenario", "SecondaryNode", "comm_guarantee", "load_scenario", "mse_design",
    "priority_combinatorial", "priority_greedy", "radar_guarantee", "radar_priority", "zf_design",
]
