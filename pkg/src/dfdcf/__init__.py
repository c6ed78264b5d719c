"""Discrete-event simulation of 802.11 DCF, static DIFS differentiation and DF-DCF."""

from __future__ import annotations

from .engine import MS, NS, S, US, Engine, EventKind, SimulationError
from .mac import AccessPolicy, Frame, MacConfig, StationMac
from .metrics import FlowStats, FlowSummary, summarize
from .network import Simulation, SimulationResult
from .policy import (
    ConfigError,
    Crossing,
    PhyParams,
    ServiceClass,
    class_priority_order,
    fixed_difs,
    frame_service_level,
    fsl_crossing_time,
    instantaneous_difs,
    is_expired,
    nb_slots_from_difs,
)
from .scenario import BUILTIN_NAMES, Scenario, builtin, load, parse, serialize

__version__ = "0.1.0"


def run(scenario: str | Scenario, method: str | AccessPolicy | None = None, seed: int | None = None,
        duration: int | None = None, audit: bool = False) -> SimulationResult:
    """Convenience wrapper: load (if named), build and run one scenario."""
    if isinstance(scenario, str):
        scenario = load(scenario)
    if duration is not None:
        scenario = scenario.with_overrides(duration=duration)
    return Simulation(scenario, method=method, seed=seed, audit=audit).run()
