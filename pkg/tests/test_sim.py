import dataclasses

import numpy as np
import pytest

from ftcbf.api.barriers import CustomBarrier
from ftcbf.api.constraints import CompositeGoalSpec, ControlAffineDynamics, FtcbfParams, reach_time_bound
from ftcbf.api.sim import (
    SimConfig,
    SimResult,
    build_scenario,
    feasibility_comparison,
    progress_series,
    reach_time,
    run,
    segment_progress,
    step,
)
from ftcbf.api.task import LassoSequence, ReachabilityProblem, TraceRecord
from ftcbf.api.verify.suites import progress_failures
from ftcbf.core.errors import ParameterError, PreconditionError, QpInfeasibleError
from tests.conftest import disc, state


def line_barrier(barrier_id, sign, shift):
    """sign * x0 + shift on a single 1D or 2D agent."""

    def gradient(flat):
        g = np.zeros(flat.size)
        g[0] = sign
        return g

    return CustomBarrier(barrier_id, lambda flat: sign * flat[0] + shift, gradient)


def test_step_at_goal_center_is_idle():
    dyn = ControlAffineDynamics.single_integrator(1, 2)
    problem = ReachabilityProblem(CompositeGoalSpec.from_barriers([disc()]), label="home")
    u, x_next = step(state((0.0, 0.0)), problem, dyn, FtcbfParams(1.0, 0.5), 0.01)
    np.testing.assert_array_equal(u, [0.0, 0.0])
    np.testing.assert_array_equal(x_next.flat, [0.0, 0.0])


def test_step_linear_barrier_with_constant_rate():
    dyn = ControlAffineDynamics.single_integrator(1, 1)
    problem = ReachabilityProblem(CompositeGoalSpec.from_barriers([line_barrier("left", -1.0, 0.0)]), label="left")
    u, x_next = step(state((1.0,)), problem, dyn, FtcbfParams(1.0, 0.0), 0.01)
    np.testing.assert_allclose(u, [-1.0], atol=1e-12)
    np.testing.assert_allclose(x_next.flat, [0.99], atol=1e-12)


def test_step_reports_contradictory_rows():
    dyn = ControlAffineDynamics.single_integrator(1, 1)
    goal = CompositeGoalSpec.from_barriers([line_barrier("left", -1.0, -1.0), line_barrier("right", 1.0, -1.0)])
    with pytest.raises(QpInfeasibleError) as excinfo:
        step(state((0.0,)), ReachabilityProblem(goal, label="torn"), dyn, FtcbfParams(1.0, 0.5), 0.01)
    details = excinfo.value.details
    assert details["problem"] == "torn"
    assert set(details["rows"]) == {"individual-goal(left)", "individual-goal(right)"}


def test_reach_time_within_bound():
    params = FtcbfParams(1.0, 0.5)
    problem = ReachabilityProblem(CompositeGoalSpec.from_barriers([disc(bounded_above=None)]), label="reach")
    x0 = state((np.sqrt(2.0), 0.0))
    bound = reach_time_bound(-1.0, params)
    assert bound == pytest.approx(2.0)
    dt = 0.001
    reached = reach_time(problem, x0, ControlAffineDynamics.single_integrator(1, 2), params, dt, 10.0)
    assert reached is not None
    assert reached <= 1.05 * bound + dt


def test_sim_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(dt=0.0)
    with pytest.raises(ParameterError):
        SimConfig(dt=2.0, max_time=1.0)
    with pytest.raises(ParameterError):
        SimConfig(suffix_cycles_target=0)


def test_unsafe_start_is_a_precondition_error(golden_scenario, golden_model):
    inside_obstacle = dataclasses.replace(golden_scenario, initial_state=state((0.0, 0.2), (1.0, -1.5)))
    with pytest.raises(PreconditionError) as excinfo:
        run(inside_obstacle, SimConfig.from_scenario(golden_model))
    assert "not_pi1O" in excinfo.value.details["barriers"]


def test_shuttle_run_accepts(shuttle, shuttle_model):
    result = run(shuttle, SimConfig.from_scenario(shuttle_model))
    assert result.status == "accept"
    assert result.verdict.accepted
    assert result.cycles_completed == 1
    assert [e.label for e in result.switch_log] == ["go_east", "go_west"]
    assert [s.label for s in result.segments] == ["go_east", "go_west"]
    assert result.segments[1].start == result.segments[0].stop
    assert result.segments[-1].stop == result.steps - 1
    np.testing.assert_array_equal(result.controls[-1], [0.0, 0.0])
    assert result.times[1] == pytest.approx(0.02)
    assert result.switch_log[0].composite_estimate == pytest.approx(4.0)
    failures, worst = progress_failures(shuttle, result, 0.02)
    assert failures == []
    # Without the curvature term the per-step increment falls short of gamma * dt.
    assert worst["literal_increment_deficit"] > 1e-6
    assert worst["literal_increment_deficit"] >= worst["increment_deficit"]


def test_shuttle_run_is_deterministic(shuttle, shuttle_model):
    config = SimConfig.from_scenario(shuttle_model)
    first, second = run(shuttle, config), run(shuttle, config)
    assert np.array_equal(first.trajectory(), second.trajectory())
    assert np.array_equal(first.control_series(), second.control_series())
    assert first.times == second.times


def test_timeout(shuttle, shuttle_model):
    config = dataclasses.replace(SimConfig.from_scenario(shuttle_model), max_time=1.0)
    result = run(shuttle, config)
    assert result.status == "timeout"
    assert result.steps == 51
    assert not result.segments[-1].reached
    assert result.verdict.status == "timeout"


def test_single_problem_suffix_accepts_when_held(shuttle):
    east = shuttle.problems["go_east"]
    scenario = dataclasses.replace(shuttle, lasso=LassoSequence((), (east,)))
    config = SimConfig(dt=0.02, max_time=60.0, params=FtcbfParams(1.0, 0.5), suffix_cycles_target=2)
    result = run(scenario, config)
    assert result.cycles_completed == 2
    assert result.status == "accept"
    assert result.verdict.stabilized
    assert [e.label for e in result.switch_log] == ["go_east", "go_east"]
    assert result.switch_log[1].step == result.switch_log[0].step + 1
    assert result.trace.valuations == [frozenset(), frozenset({"east"})]


def test_obstacle_on_direct_path_forces_detour(detour, detour_model):
    result = run(detour, SimConfig.from_scenario(detour_model))
    assert result.status == "accept"
    (keep_out,) = detour.problems["around"].safety
    assert keep_out.id == "not_obst"
    levels = [keep_out.value(result.state(k)) for k in range(result.steps)]
    assert min(levels) >= -1e-3
    assert min(levels) < 0.05
    assert result.max_safety_violation <= 1e-3
    # The straight line is x = 0; the obstacle disc reaches out to x = -0.3.
    assert result.trajectory()[:, 0].min() < -0.3
    failures, _ = progress_failures(detour, result, 0.01)
    assert failures == []


def test_qp_failure_carries_partial_result(shuttle):
    goal = CompositeGoalSpec.from_barriers([line_barrier("left", -1.0, -1.0), line_barrier("right", 1.0, -1.0)])
    torn = ReachabilityProblem(goal, label="torn")
    scenario = dataclasses.replace(shuttle, lasso=LassoSequence((), (torn,)), problems={"torn": torn})
    with pytest.raises(QpInfeasibleError) as excinfo:
        run(scenario, SimConfig(dt=0.01, max_time=1.0))
    partial = excinfo.value.partial_result
    assert partial.status == "infeasible"
    assert partial.steps == 1
    assert not partial.segments[-1].reached


def test_progress_series_held_at_goal_is_flat():
    result = SimResult(n_agents=1, trace=TraceRecord())
    for k in range(5):
        result.append(0.1 * k, state((0.0, 0.0)), np.zeros(2))
    series = progress_series(result, CompositeGoalSpec.from_barriers([disc("g1"), disc("g2", center=(0.5, 0.0))]))
    assert series.steps == result.steps - 1
    np.testing.assert_array_equal(series.increments, np.zeros(4))
    np.testing.assert_array_equal(series.rates, np.zeros(4))
    assert not series.pre_goal.any()
    np.testing.assert_allclose(series.levels["g1"], np.ones(5))


def test_progress_series_needs_bounded_goal():
    result = SimResult(n_agents=1)
    result.append(0.0, state((0.0, 0.0)), np.zeros(2))
    with pytest.raises(ParameterError):
        progress_series(result, CompositeGoalSpec.from_barriers([disc(bounded_above=None)]))


@pytest.mark.slow
def test_golden_run_accepts(golden_run):
    _, result = golden_run
    assert result.status == "accept"
    assert result.cycles_completed >= 2
    assert result.max_safety_violation <= 1e-3
    assert [e.label for e in result.switch_log] == ["R1", "R2", "R1", "R2"]


@pytest.mark.slow
def test_golden_progress(golden_run):
    scenario, result = golden_run
    dt = 0.01
    for segment in result.segments:
        series = segment_progress(result, scenario, segment)
        mask = series.pre_goal
        assert np.all(series.rates[mask] >= scenario.params.gamma - 1e-6)
        assert np.all(series.increments[mask] >= scenario.params.gamma * dt - 1e-6 - series.curvature[mask])
        np.testing.assert_allclose(series.increments, dt * series.rates - series.curvature, atol=1e-9)


@pytest.mark.slow
def test_golden_trace_replays(golden_run):
    scenario, result = golden_run
    replayed = TraceRecord()
    for k in range(result.steps):
        replayed.record_valuation(scenario.workspace.valuation(result.state(k)), result.times[k])
    assert replayed.entries == result.trace.entries


@pytest.mark.slow
def test_golden_composite_feasible_where_individual_is(golden_run):
    scenario, result = golden_run
    report = feasibility_comparison(result, scenario, samples=200)
    assert report.samples > 0
    assert report.passed
