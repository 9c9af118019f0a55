"""Deterministic closed-loop herding simulator."""
from herdtrack.sim.runner import RunReport, RunResult, run_closed_loop
from herdtrack.sim.scenario import ScenarioConfig, builtin_scenario_path, load_scenario
from herdtrack.sim.world import MissionPhase, WorldState, geofence_check, step_world

__all__ = [
    "MissionPhase",
    "RunReport",
    "RunResult",
    "ScenarioConfig",
    "WorldState",
    "builtin_scenario_path",
    "geofence_check",
    "load_scenario",
    "run_closed_loop",
    "step_world",
]
