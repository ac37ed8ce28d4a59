"""Deterministic ground-truth world: load physics, scenarios, traces."""

from .profiles import DeviceProfile, ServiceGroundTruth, default_devices, default_types
from .scenario import ScenarioScript, load_scenario, load_scenario_text, bundled_scenario_path
from .world import World, run_scenario, inject_perturbation
from .trace import RunResult, TRACE_COLUMNS, EVENT_COLUMNS

__all__ = [
    "DeviceProfile",
    "ServiceGroundTruth",
    "default_devices",
    "default_types",
    "ScenarioScript",
    "load_scenario",
    "load_scenario_text",
    "bundled_scenario_path",
    "World",
    "run_scenario",
    "inject_perturbation",
    "RunResult",
    "TRACE_COLUMNS",
    "EVENT_COLUMNS",
]
