"""Closed-loop executive for lasso-shaped reachability tasks.

Each control step solves the min-norm QP for the active problem, holds the
control over one Euler step, and records the trace. When every goal barrier
of the active problem is nonnegative (or above the switch margin) the
executive moves on to the next problem of the lasso.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ftcbf.api.barriers.functions import QuadraticBarrier
from ftcbf.api.barriers.geometry import StackedState
from ftcbf.api.constraints.dynamics import ControlAffineDynamics
from ftcbf.api.constraints.rows import (
    CompositeGoalSpec,
    FtcbfParams,
    assemble_problem_rows,
    composite_time_estimate,
    individual_only_rows,
    individual_time_bounds,
)
from ftcbf.api.qp.minnorm import DEFAULT_SETTINGS, QpProblem, QpStatus, solve
from ftcbf.api.sim.builder import Scenario
from ftcbf.api.task.problems import ReachabilityProblem, in_goal
from ftcbf.api.task.trace import LassoVerdict, TraceRecord, check_lasso, record_sample
from ftcbf.core.config import QpSettings
from ftcbf.core.errors import ParameterError, PreconditionError, QpFailure, QpInfeasibleError, QpIterationLimitError
from ftcbf.models.scenario import ScenarioFile

logger = logging.getLogger(__name__)

# Slack allowed on safety barriers for discretization (Euler steps between samples).
SAFETY_TOLERANCE = 1e-3


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    max_time: float = 100.0
    params: FtcbfParams = FtcbfParams()
    goal_switch_margin: float = 0.0
    suffix_cycles_target: int = 2

    def __post_init__(self):
        if not self.dt > 0 or not self.max_time > 0:
            raise ParameterError(f"dt and max_time must be > 0, got dt={self.dt}, max_time={self.max_time}")
        if self.dt > self.max_time:
            raise ParameterError(f"dt={self.dt} exceeds max_time={self.max_time}")
        if self.goal_switch_margin < 0:
            raise ParameterError(f"goal_switch_margin must be >= 0, got {self.goal_switch_margin}")
        if self.suffix_cycles_target < 1:
            raise ParameterError(f"suffix_cycles_target must be >= 1, got {self.suffix_cycles_target}")

    @classmethod
    def from_scenario(cls, model: ScenarioFile) -> "SimConfig":
        return cls(
            dt=model.sim.dt,
            max_time=model.sim.max_time,
            params=FtcbfParams(model.params.gamma, model.params.rho),
            goal_switch_margin=model.sim.goal_switch_margin,
            suffix_cycles_target=model.sim.suffix_cycles_target,
        )


@dataclass(frozen=True)
class SwitchEvent:
    label: str
    time: float
    step: int
    # Largest individual reach-time bound when the problem was activated, if it had individual goal rows.
    time_bound: Optional[float] = None
    composite_estimate: Optional[float] = None


@dataclass(frozen=True)
class Violation:
    time: float
    barrier_id: str
    value: float


@dataclass(frozen=True)
class Segment:
    """Samples [start, stop] during which `label` was the active problem."""

    label: str
    start: int
    stop: int
    reached: bool = True


@dataclass
class SimResult:
    n_agents: int
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    controls: List[np.ndarray] = field(default_factory=list)
    trace: TraceRecord = field(default_factory=TraceRecord)
    switch_log: List[SwitchEvent] = field(default_factory=list)
    violation_log: List[Violation] = field(default_factory=list)
    segments: List[Segment] = field(default_factory=list)
    cycles_completed: int = 0
    status: str = "running"
    verdict: Optional[LassoVerdict] = None

    def append(self, t: float, x: StackedState, u: np.ndarray) -> None:
        self.times.append(t)
        self.states.append(x.flat.copy())
        self.controls.append(np.array(u, dtype=float))

    @property
    def steps(self) -> int:
        return len(self.times)

    def state(self, k: int) -> StackedState:
        return StackedState.from_flat(self.states[k], self.n_agents)

    @property
    def max_safety_violation(self) -> float:
        return max((-v.value for v in self.violation_log), default=0.0)

    def trajectory(self) -> np.ndarray:
        return np.array(self.states)

    def control_series(self) -> np.ndarray:
        return np.array(self.controls)


def _unsafe(problem: ReachabilityProblem, x: StackedState, tolerance: float = 0.0) -> List[Tuple[str, float]]:
    return [(h.id, v) for h in problem.safety if (v := h.value(x)) < -tolerance]


def step(
    x: StackedState,
    problem: ReachabilityProblem,
    dyn: ControlAffineDynamics,
    params: FtcbfParams,
    dt: float,
    bounds=None,
    qp_settings: QpSettings = DEFAULT_SETTINGS,
) -> Tuple[np.ndarray, StackedState]:
    """
    Solve the problem's QP at x and take one explicit Euler step under zero-order hold.

    Args:
        x: Current stacked state.
        problem: Active reachability problem (goal rows plus invariance rows).
        dyn: Control-affine dynamics.
        params: Finite-time gain gamma and exponent rho.
        dt: Euler step.
        bounds: Optional per-coordinate control limits.
        qp_settings: Solver settings.

    Returns:
        The control held over the step and the next state.

    Raises:
        QpInfeasibleError: With the conflicting row tags in `details["rows"]`.
        QpIterationLimitError: If the solver hits its iteration cap.
    """
    rows = assemble_problem_rows(problem, dyn, params, x)
    solution = solve(QpProblem(tuple(rows), dyn.control_dim, bounds), qp_settings)
    if solution.status is QpStatus.INFEASIBLE:
        raise QpInfeasibleError(
            f"controller QP for '{problem.label}' is infeasible",
            {"problem": problem.label, **solution.diagnostic},
        )
    if solution.status is QpStatus.MAX_ITERATIONS:
        raise QpIterationLimitError(
            f"controller QP for '{problem.label}' hit the iteration cap",
            {"problem": problem.label, "iterations": solution.iterations},
        )
    x_next = StackedState.from_flat(x.flat + dt * dyn.vector_field(x, solution.u), x.n_agents)
    return solution.u, x_next


def _diagnostics(problem: ReachabilityProblem, params: FtcbfParams, x: StackedState) -> Tuple[Optional[float], Optional[float]]:
    bounds = individual_time_bounds(problem.goal, params, x)
    return max(bounds.values(), default=None), composite_time_estimate(problem.goal, params, x)


def run(scenario: Scenario, config: SimConfig, qp_settings: QpSettings = DEFAULT_SETTINGS) -> SimResult:
    """
    Drive the lasso: prefix problems once, then the suffix until enough cycles are done.

    Samples are taken at t = k * dt. A problem is finished at the first sample
    where all its goal barriers reach the switch margin; the next problem must
    then hold its safety barriers within SAFETY_TOLERANCE.

    Args:
        scenario: Built scenario (workspace, dynamics, lasso, initial state).
        config: Step, horizon, parameters and the suffix cycle target.
        qp_settings: Solver settings for every step.

    Returns:
        SimResult with status accept, reject or timeout and the lasso verdict.

    Raises:
        PreconditionError: If the start or a switch state is outside the next safety set.
        QpFailure: On an infeasible or non-converging step; `partial_result` holds
            the run up to that sample with status infeasible.
    """
    workspace, dyn, lasso, params = scenario.workspace, scenario.dynamics, scenario.lasso, config.params
    x = scenario.initial_state
    workspace.check_state(x)
    dyn.check_state(x)

    in_prefix, index = bool(lasso.prefix), 0
    problem = lasso.first()
    unsafe = _unsafe(problem, x)
    if unsafe:
        raise PreconditionError(
            f"initial state violates the safety set of '{problem.label}'",
            {"problem": problem.label, "barriers": {bid: v for bid, v in unsafe}},
        )

    result = SimResult(n_agents=x.n_agents)
    zero = np.zeros(dyn.control_dim)
    max_steps = int(math.floor(config.max_time / config.dt + 1e-9))
    segment_start = 0
    time_bound, estimate = _diagnostics(problem, params, x)
    logger.info("Starting '%s' with problem '%s' (reach bound %s)", scenario.name, problem.label, time_bound)

    k = 0
    while True:
        t = k * config.dt
        record_sample(result.trace, x, t, workspace)
        for h in problem.safety:
            value = h.value(x)
            if value < 0:
                result.violation_log.append(Violation(t, h.id, value))

        if in_goal(x, problem, config.goal_switch_margin):
            result.switch_log.append(SwitchEvent(problem.label, t, k, time_bound, estimate))
            result.segments.append(Segment(problem.label, segment_start, k))
            logger.info("Reached goal of '%s' at t=%.3f", problem.label, t)
            in_prefix, index, cycled = lasso.position_after(in_prefix, index)
            if cycled:
                result.cycles_completed += 1
                logger.info("Completed suffix cycle %d", result.cycles_completed)
            if result.cycles_completed >= config.suffix_cycles_target:
                result.append(t, x, zero)
                result.status = "finished"
                break
            problem = lasso.problem_at(in_prefix, index)
            unsafe = _unsafe(problem, x, SAFETY_TOLERANCE)
            if unsafe:
                raise PreconditionError(
                    f"state at t={t:.3f} is outside the safety set of the next problem '{problem.label}'",
                    {"problem": problem.label, "time": t, "barriers": {bid: v for bid, v in unsafe}},
                )
            segment_start = k
            time_bound, estimate = _diagnostics(problem, params, x)

        if k >= max_steps:
            result.append(t, x, zero)
            result.segments.append(Segment(problem.label, segment_start, k, reached=False))
            result.status = "timeout"
            logger.info("Maximum time %.2f reached during '%s'", config.max_time, problem.label)
            break

        try:
            u, x_next = step(x, problem, dyn, params, config.dt, scenario.bounds, qp_settings)
        except QpFailure as e:
            result.append(t, x, zero)
            result.segments.append(Segment(problem.label, segment_start, k, reached=False))
            result.status = "infeasible"
            e.partial_result = result
            logger.error("QP failure at t=%.3f: %s %s", t, e.message, e.details)
            raise
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("t=%.3f problem=%s u=%s", t, problem.label, np.array2string(u, precision=4))
        result.append(t, x, u)
        x = x_next
        k += 1

    prefix_points, suffix_points = lasso.waypoints()
    verdict = check_lasso(
        result.trace, prefix_points, suffix_points, config.suffix_cycles_target, stabilized=result.status == "finished"
    )
    if result.status == "timeout":
        verdict = verdict.as_timeout()
    result.verdict = verdict
    result.status = verdict.status
    logger.info("Run finished: %s (%s)", verdict.status, verdict.message)
    return result


@dataclass(frozen=True)
class ProgressSeries:
    times: np.ndarray
    levels: Dict[str, np.ndarray]
    weighted_sum: np.ndarray
    # One entry per step: sample k to k+1.
    increments: np.ndarray
    rates: np.ndarray
    pre_goal: np.ndarray
    # dt^2 * sum alpha u^T P u over quadratic goals: what explicit Euler loses against dt * rate.
    curvature: np.ndarray

    @property
    def steps(self) -> int:
        return self.increments.size


def _quadratic_curvature(spec: CompositeGoalSpec, x: StackedState, x_dot: np.ndarray) -> float:
    total = 0.0
    for barrier, alpha in spec.bounded:
        if isinstance(barrier, QuadraticBarrier):
            v = x_dot[x.agent_slice(barrier.agent)]
            total += alpha * float(v @ barrier.region.shape @ v)
    return total


def progress_series(
    result: SimResult,
    spec: CompositeGoalSpec,
    segment: Optional[Segment] = None,
    dynamics: Optional[ControlAffineDynamics] = None,
) -> ProgressSeries:
    """Weighted sum of the bounded goal barriers over a segment, its increments and its rate."""
    if not result.steps:
        raise ParameterError("progress series needs a non-empty run")
    if not spec.bounded:
        raise ParameterError("progress series needs bounded goal barriers")
    start, stop = (segment.start, segment.stop) if segment else (0, result.steps - 1)
    indices = range(start, stop + 1)
    states = [result.state(k) for k in indices]
    levels = {b.id: np.array([b.value(x) for x in states]) for b, _ in spec.bounded}
    weighted = sum(alpha * levels[b.id] for b, alpha in spec.bounded)
    rates, curvature = [], []
    for k, x in zip(indices[:-1], states[:-1]):
        u = result.controls[k]
        x_dot = dynamics.vector_field(x, u) if dynamics is not None else u
        rates.append(float(spec.weighted_gradient(x) @ x_dot))
        dt = result.times[k + 1] - result.times[k]
        curvature.append(dt * dt * _quadratic_curvature(spec, x, x_dot))
    pre_goal = np.array([spec.min_bounded(x) < 0 for x in states[:-1]], dtype=bool)
    return ProgressSeries(
        times=np.array([result.times[k] for k in indices]),
        levels=levels,
        weighted_sum=np.asarray(weighted, dtype=float),
        increments=np.diff(weighted),
        rates=np.array(rates),
        pre_goal=pre_goal,
        curvature=np.array(curvature),
    )


def segment_progress(result: SimResult, scenario: Scenario, segment: Segment) -> ProgressSeries:
    problem = scenario.problems[segment.label]
    return progress_series(result, problem.goal, segment, scenario.dynamics)


def active_problem_at(result: SimResult, step_index: int) -> str:
    """Label of the problem whose controller produced the control at sample `step_index`."""
    for segment in result.segments:
        if segment.start <= step_index < segment.stop:
            return segment.label
    return result.segments[-1].label


@dataclass
class FeasibilityReport:
    samples: int = 0
    composite_feasible: int = 0
    individual_feasible: int = 0
    counterexamples: List[Dict[str, object]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def feasibility_comparison(
    result: SimResult,
    scenario: Scenario,
    samples: int = 1000,
    qp_settings: QpSettings = DEFAULT_SETTINGS,
) -> FeasibilityReport:
    """At states along a run, check that the composite QP is feasible whenever the all-individual QP is."""
    report = FeasibilityReport()
    if not result.segments:
        return report
    picks = np.unique(np.linspace(0, result.steps - 1, min(samples, result.steps)).round().astype(int))
    dyn, params = scenario.dynamics, scenario.params
    for k in picks:
        x = result.state(int(k))
        problem = scenario.problems[active_problem_at(result, int(k))]
        composite = solve(QpProblem(tuple(assemble_problem_rows(problem, dyn, params, x)), dyn.control_dim), qp_settings)
        individual = solve(QpProblem(tuple(individual_only_rows(problem, dyn, params, x)), dyn.control_dim), qp_settings)
        report.samples += 1
        report.composite_feasible += composite.optimal
        report.individual_feasible += individual.optimal
        if individual.optimal and not composite.optimal:
            counterexample = {"time": result.times[k], "problem": problem.label, "state": result.states[k].tolist()}
            report.counterexamples.append(counterexample)
            logger.warning("Composite QP infeasible where individual QP is feasible: %s", counterexample)
    return report


def reach_time(
    problem: ReachabilityProblem,
    x0: StackedState,
    dyn: ControlAffineDynamics,
    params: FtcbfParams,
    dt: float,
    max_time: float,
    qp_settings: QpSettings = DEFAULT_SETTINGS,
) -> Optional[float]:
    """Time of the first sample inside the goal set, or None if max_time passes first."""
    x = x0
    for k in range(int(math.floor(max_time / dt + 1e-9)) + 1):
        if in_goal(x, problem):
            return k * dt
        _, x = step(x, problem, dyn, params, dt, qp_settings=qp_settings)
    return None
