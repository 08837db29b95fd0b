"""Deterministic multi-RIC RAN control-plane simulator with conflict mitigation."""

from ricsim.engine import Simulation
from ricsim.scenario import ScenarioConfig, ScenarioError, load_scenario

__all__ = ["Simulation", "ScenarioConfig", "ScenarioError", "load_scenario"]

__version__ = "0.1.0"
