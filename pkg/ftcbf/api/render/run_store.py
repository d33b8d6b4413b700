import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from ftcbf.api.render import csv_writer
from ftcbf.api.render.svg_generator import SvgPlotGenerator
from ftcbf.api.sim.builder import Scenario, build_scenario
from ftcbf.api.sim.engine import Segment, SimResult, SwitchEvent, segment_progress
from ftcbf.core.errors import FtcbfError
from ftcbf.models.reports import RunSummary
from ftcbf.models.scenario import ScenarioFile, parse_scenario

logger = logging.getLogger(__name__)

SCENARIO = "scenario.json"
SUMMARY = "summary.json"
TRAJECTORY_SVG = "trajectory.svg"
PROGRESS_SVG = "progress.svg"


class RunNotFoundError(FtcbfError):
    """A run directory is missing or lacks the files `progress` reads."""


def summarize(scenario_name: str, result: SimResult, error: Optional[FtcbfError] = None) -> RunSummary:
    return RunSummary(
        scenario=scenario_name,
        status=result.status,
        verdict_message=result.verdict.message if result.verdict else (error.message if error else ""),
        stabilized=bool(result.verdict and result.verdict.stabilized),
        cycles_completed=result.cycles_completed,
        steps=result.steps,
        final_time=result.times[-1] if result.times else 0.0,
        max_safety_violation=result.max_safety_violation,
        violations=len(result.violation_log),
        error=error.to_dict() if error else None,
    )


@dataclass
class StoredRun:
    model: ScenarioFile
    scenario: Scenario
    result: SimResult
    summary: Optional[RunSummary]


def _segments_from_switches(scenario: Scenario, events: List[SwitchEvent], last_index: int) -> List[Segment]:
    """Rebuild activation segments by replaying the lasso order against the switch log."""
    lasso = scenario.lasso
    in_prefix, index = bool(lasso.prefix), 0
    segments, start = [], 0
    for event in events:
        segments.append(Segment(event.label, start, event.step))
        start = event.step
        in_prefix, index, _ = lasso.position_after(in_prefix, index)
    if last_index > start or not segments:
        segments.append(Segment(lasso.problem_at(in_prefix, index).label, start, last_index, reached=False))
    return segments


class RunStore:
    """Writes run outputs into a directory and reads them back for `progress`."""

    def __init__(self, generator: Optional[SvgPlotGenerator] = None):
        self.generator = generator or SvgPlotGenerator()

    def save_run(
        self,
        out_dir: Union[str, Path],
        model: ScenarioFile,
        scenario: Scenario,
        result: SimResult,
        summary: RunSummary,
    ) -> Dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "trajectory": out / csv_writer.TRAJECTORY,
            "trace": out / csv_writer.TRACE,
            "switches": out / csv_writer.SWITCHES,
            "violations": out / csv_writer.VIOLATIONS,
            "summary": out / SUMMARY,
            "scenario": out / SCENARIO,
            "plot": out / TRAJECTORY_SVG,
        }
        csv_writer.write_trajectory(paths["trajectory"], result, scenario.workspace.dim)
        csv_writer.write_trace(paths["trace"], result.trace.entries)
        csv_writer.write_switches(paths["switches"], result.switch_log)
        csv_writer.write_violations(paths["violations"], result.violation_log)
        paths["summary"].write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
        paths["scenario"].write_text(model.to_json() + "\n", encoding="utf-8")
        if result.steps:
            paths["plot"].write_text(self.generator.trajectory_svg(scenario, result), encoding="utf-8")
        else:
            del paths["plot"]
        logger.info("Run outputs written to %s", out)
        return paths

    def load_run(self, run_dir: Union[str, Path]) -> StoredRun:
        run = Path(run_dir)
        scenario_path, trajectory_path = run / SCENARIO, run / csv_writer.TRAJECTORY
        missing = [p.name for p in (scenario_path, trajectory_path) if not p.is_file()]
        if missing:
            raise RunNotFoundError(f"run directory {run} is missing {', '.join(missing)}", {"missing": missing})

        model = parse_scenario(json.loads(scenario_path.read_text(encoding="utf-8")))
        scenario = build_scenario(model)
        times, states, controls = csv_writer.read_trajectory(trajectory_path, scenario.workspace.n_agents, scenario.workspace.dim)
        if not times:
            raise RunNotFoundError(f"{trajectory_path} has no samples")

        events = []
        switches_path = run / csv_writer.SWITCHES
        if switches_path.is_file():
            for row in csv_writer.read_table(switches_path):
                events.append(
                    SwitchEvent(
                        row["problem"],
                        float(row["time"]),
                        int(row["step"]),
                        float(row["time_bound"]) if row["time_bound"] else None,
                        float(row["composite_estimate"]) if row["composite_estimate"] else None,
                    )
                )
        result = SimResult(n_agents=scenario.workspace.n_agents, times=times, states=states, controls=controls)
        result.switch_log = events
        result.segments = _segments_from_switches(scenario, events, len(times) - 1)

        summary = None
        summary_path = run / SUMMARY
        if summary_path.is_file():
            summary = RunSummary.model_validate_json(summary_path.read_text(encoding="utf-8"))
            result.status = summary.status
            result.cycles_completed = summary.cycles_completed
        return StoredRun(model, scenario, result, summary)

    def save_progress(self, run_dir: Union[str, Path], stored: StoredRun) -> Dict[str, Path]:
        run = Path(run_dir)
        segments = [
            (segment.label, segment_progress(stored.result, stored.scenario, segment))
            for segment in stored.result.segments
            if segment.stop > segment.start and stored.scenario.problems[segment.label].goal.bounded
        ]
        if not segments:
            raise RunNotFoundError(f"run in {run} has no segment with bounded goal barriers to plot")
        paths = {"progress": run / csv_writer.PROGRESS, "plot": run / PROGRESS_SVG}
        csv_writer.write_progress(paths["progress"], segments)
        svg = self.generator.progress_svg(stored.scenario.name, segments, stored.scenario.params.gamma)
        paths["plot"].write_text(svg, encoding="utf-8")
        logger.info("Progress outputs written to %s", run)
        return paths
