"""Discrete-event MANET simulator: DSR with a reputation-based punishment layer."""

from .config import RunConfig, ScenarioConfig, parse_config, format_config, load_config
from .metrics import Counters, RunResult, pdr, overhead
from .simulation import Simulation, run

__all__ = ["RunConfig", "ScenarioConfig", "parse_config", "format_config", "load_config",
           "Counters", "RunResult", "pdr", "overhead", "Simulation", "run"]
__version__ = "0.1.0"
