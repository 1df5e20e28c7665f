"""Monte Carlo reliability simulation of transmission systems with
component state machines, DC power flow, operator corrective actions
and blackout statistics.
"""
from .components import OutageCause
from .engine import ReplicationResult, SimConfig, run_monte_carlo, run_year
from .io import load_rts96, parse_network, parse_profile
from .model import (
    Bus,
    ControlArea,
    Generator,
    Line,
    Load,
    NetworkModel,
    Params,
    apply_loading_level,
    connected_components,
    island_balance,
    validate,
)
from .stats import BlackoutRecord, StatsAccumulator, eens_by_cause, frequency_curve, poisson_confidence_interval

__version__ = "0.1.0"

__all__ = [
    "BlackoutRecord",
    "Bus",
    "ControlArea",
    "Generator",
    "Line",
    "Load",
    "NetworkModel",
    "OutageCause",
    "Params",
    "ReplicationResult",
    "SimConfig",
    "StatsAccumulator",
    "apply_loading_level",
    "connected_components",
    "eens_by_cause",
    "frequency_curve",
    "island_balance",
    "load_rts96",
    "parse_network",
    "parse_profile",
    "poisson_confidence_interval",
    "run_monte_carlo",
    "run_year",
    "validate",
]
