from ftcbf.api.sim.builder import Scenario, build_scenario
from ftcbf.api.sim.engine import (
    FeasibilityReport,
    ProgressSeries,
    Segment,
    SimConfig,
    SimResult,
    SwitchEvent,
    Violation,
    feasibility_comparison,
    progress_series,
    reach_time,
    run,
    segment_progress,
    step,
)

__all__ = [
    "FeasibilityReport",
    "ProgressSeries",
    "Scenario",
    "Segment",
    "SimConfig",
    "SimResult",
    "SwitchEvent",
    "Violation",
    "build_scenario",
    "feasibility_comparison",
    "progress_series",
    "reach_time",
    "run",
    "segment_progress",
    "step",
]
