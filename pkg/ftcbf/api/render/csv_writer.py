"""CSV tables for runs. Floats are written with repr so they read back exactly."""
import csv
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from ftcbf.api.sim.engine import ProgressSeries, SimResult, SwitchEvent, Violation
from ftcbf.api.task.trace import TraceEntry

TRAJECTORY = "trajectory.csv"
TRACE = "trace.csv"
SWITCHES = "switches.csv"
VIOLATIONS = "violations.csv"
PROGRESS = "progress.csv"
PROPOSITION_SEPARATOR = ";"


def num(value) -> str:
    return "" if value is None else repr(float(value))


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> int:
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            count += 1
    return count


def trajectory_header(n_agents: int, dim: int) -> List[str]:
    coords = [f"{i}_{d}" for i in range(n_agents) for d in range(dim)]
    return ["t"] + [f"x{c}" for c in coords] + [f"u{c}" for c in coords]


def write_trajectory(path: Path, result: SimResult, dim: int) -> int:
    rows = (
        [num(t)] + [num(v) for v in x] + [num(v) for v in u]
        for t, x, u in zip(result.times, result.states, result.controls)
    )
    return _write(path, trajectory_header(result.n_agents, dim), rows)


def write_trace(path: Path, entries: Sequence[TraceEntry]) -> int:
    rows = ([num(e.enter_time), PROPOSITION_SEPARATOR.join(sorted(e.valuation))] for e in entries)
    return _write(path, ["enter_time", "propositions"], rows)


def write_switches(path: Path, events: Sequence[SwitchEvent]) -> int:
    rows = ([e.label, num(e.time), str(e.step), num(e.time_bound), num(e.composite_estimate)] for e in events)
    return _write(path, ["problem", "time", "step", "time_bound", "composite_estimate"], rows)


def write_violations(path: Path, violations: Sequence[Violation]) -> int:
    rows = ([num(v.time), v.barrier_id, num(v.value)] for v in violations)
    return _write(path, ["time", "barrier", "value"], rows)


def write_progress(path: Path, segments: Sequence[tuple]) -> int:
    """One row per sample of each (label, ProgressSeries) segment.

    Goal columns are the union of goal barriers over all segments; a cell is
    empty when that barrier is not a goal of the segment. The last sample of
    a segment has no increment or rate.
    """
    goal_ids: List[str] = []
    for _, series in segments:
        goal_ids.extend(b for b in series.levels if b not in goal_ids)

    def rows():
        for index, (label, series) in enumerate(segments):
            for k, t in enumerate(series.times):
                stepped = k < series.steps
                yield [
                    str(index),
                    label,
                    num(t),
                    num(series.weighted_sum[k]),
                    num(series.increments[k]) if stepped else "",
                    num(series.rates[k]) if stepped else "",
                    ("1" if series.pre_goal[k] else "0") if stepped else "",
                ] + [num(series.levels[g][k]) if g in series.levels else "" for g in goal_ids]

    header = ["segment", "problem", "t", "weighted_sum", "increment", "rate", "pre_goal"] + [f"h_{g}" for g in goal_ids]
    return _write(path, header, rows())


def read_table(path: Path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def read_trajectory(path: Path, n_agents: int, dim: int):
    """Returns (times, states, controls) as lists of floats and flat arrays."""
    header = trajectory_header(n_agents, dim)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        found = next(reader, None)
        if found != header:
            raise ValueError(f"{path.name} header {found} does not match {n_agents} agents in {dim}D")
        width = n_agents * dim
        times, states, controls = [], [], []
        for row in reader:
            values = np.array([float(v) for v in row])
            times.append(float(values[0]))
            states.append(values[1:1 + width])
            controls.append(values[1 + width:])
    return times, states, controls
