import numpy as np
import pytest

from ftcbf.api.barriers import CustomBarrier, StackedState
from ftcbf.api.constraints import (
    COMPOSITE,
    INDIVIDUAL_GOAL,
    INVARIANCE,
    CompositeGoalSpec,
    ControlAffineDynamics,
    FtcbfParams,
    assemble_problem_rows,
    composite_row,
    composite_time_estimate,
    individual_only_rows,
    individual_row,
    lie_derivatives,
    reach_time_bound,
    sign_pow,
)
from ftcbf.api.constraints.rows import individual_time_bounds, rows_to_arrays
from ftcbf.api.task import ReachabilityProblem
from ftcbf.core.errors import ParameterError
from tests.conftest import disc, state


@pytest.mark.parametrize("h, gamma, rho, expected", [(0.0, 1.0, 0.0, 0.0), (-4.0, 1.0, 0.5, -2.0), (9.0, 2.0, 0.5, 6.0)])
def test_sign_pow(h, gamma, rho, expected):
    assert sign_pow(h, gamma, rho) == pytest.approx(expected)


def test_sign_pow_monotone_and_odd():
    values = np.linspace(-5, 5, 201)
    for rho in (0.0, 0.25, 0.5, 0.75):
        series = [sign_pow(h, 1.5, rho) for h in values]
        assert all(a <= b for a, b in zip(series, series[1:]))
        for h in values:
            assert sign_pow(-h, 1.5, rho) == -sign_pow(h, 1.5, rho)


@pytest.mark.parametrize("gamma, rho", [(0.0, 0.5), (-1.0, 0.5), (1.0, 1.0), (1.0, -0.1)])
def test_params_rejected(gamma, rho):
    with pytest.raises(ParameterError):
        FtcbfParams(gamma, rho)


def test_individual_row_outside_region():
    dyn = ControlAffineDynamics.single_integrator(1, 2)
    row = individual_row(disc(), dyn, FtcbfParams(1.0, 0.0), state((2.0, 0.0)))
    np.testing.assert_allclose(row.normal, [-4.0, 0.0])
    assert row.offset == pytest.approx(1.0)
    assert row.tag.kind == INDIVIDUAL_GOAL and row.tag.barrier_id == "disc"


def test_individual_row_at_center_is_slack():
    dyn = ControlAffineDynamics.single_integrator(1, 2)
    row = individual_row(disc(), dyn, FtcbfParams(2.0, 0.5), state((0.0, 0.0)))
    np.testing.assert_allclose(row.normal, [0.0, 0.0])
    assert row.offset == pytest.approx(-2.0)
    assert row.satisfied_by(np.zeros(2))


def test_individual_row_degenerate():
    flat_pit = CustomBarrier("pit", lambda x: -1.0, lambda x: np.zeros(x.size))
    dyn = ControlAffineDynamics.single_integrator(1, 2)
    row = individual_row(flat_pit, dyn, FtcbfParams(1.0, 0.5), state((0.0, 0.0)))
    assert row.degenerate
    assert row.offset == pytest.approx(1.0)


def test_individual_row_soundness():
    rng = np.random.default_rng(11)
    drift = np.array([[0.0, 1.0], [-1.0, 0.0]])
    dyn = ControlAffineDynamics(lambda x: drift @ x, lambda x: np.diag([1.0, 2.0]), 2, 2)
    barrier = disc(center=(0.5, -0.5), scale=3.0)
    params = FtcbfParams(1.3, 0.4)
    for _ in range(1000):
        x = StackedState(rng.uniform(-2, 2, (1, 2)))
        u = rng.uniform(-3, 3, 2)
        grad = barrier.gradient(x)
        direct = grad @ (drift @ x.flat) + grad @ (np.diag([1.0, 2.0]) @ u) + sign_pow(barrier.value(x), 1.3, 0.4)
        row = individual_row(barrier, dyn, params, x)
        assert row.residual(u) == pytest.approx(direct, abs=1e-12)
        if abs(direct) > 1e-12:
            assert row.satisfied_by(u) == (direct >= 0)


def test_lie_derivatives_with_drift():
    dyn = ControlAffineDynamics(lambda x: -x, lambda x: np.eye(2), 2, 2)
    lf, lg = lie_derivatives(disc(), dyn, state((1.0, 2.0)))
    assert lf == pytest.approx(10.0)
    np.testing.assert_allclose(lg, [-2.0, -4.0])


def two_goal_spec(alphas=None):
    return CompositeGoalSpec.from_barriers([disc("A", 0), disc("B", 1, center=(4.0, 0.0))], alphas)


def test_composite_row_hand_assembled():
    dyn = ControlAffineDynamics.single_integrator(2, 2)
    row = composite_row(two_goal_spec(), dyn, 1.0, state((2.0, 0.0), (2.0, 0.0)))
    np.testing.assert_allclose(row.normal, [-4.0, 0.0, 4.0, 0.0])
    assert row.offset == pytest.approx(1.0)
    assert row.tag.kind == COMPOSITE


def test_composite_row_sign_term():
    dyn = ControlAffineDynamics.single_integrator(2, 2)
    inside = composite_row(two_goal_spec(), dyn, 1.0, state((0.1, 0.0), (4.0, 0.1)))
    assert inside.offset == pytest.approx(-1.0)
    boundary = composite_row(two_goal_spec(), dyn, 1.0, state((1.0, 0.0), (4.0, 0.0)))
    assert boundary.offset == 0.0


def test_composite_normal_is_weighted_sum():
    dyn = ControlAffineDynamics.single_integrator(2, 2)
    spec = two_goal_spec({"A": 2.0, "B": 0.5})
    params = FtcbfParams(1.0, 0.5)
    x = state((0.7, -1.2), (2.5, 0.4))
    composite = composite_row(spec, dyn, params.gamma, x)
    singles = [individual_row(b, dyn, params, x) for b, _ in spec.bounded]
    expected = sum(alpha * row.normal for (_, alpha), row in zip(spec.bounded, singles))
    assert np.array_equal(composite.normal, expected)


def test_composite_requires_bounded_barriers():
    dyn = ControlAffineDynamics.single_integrator(1, 2)
    spec = CompositeGoalSpec(unbounded=(disc(bounded_above=None),))
    with pytest.raises(ParameterError):
        composite_row(spec, dyn, 1.0, state((0.0, 0.0)))
    with pytest.raises(ParameterError):
        CompositeGoalSpec.from_barriers([])


def test_goal_spec_rejects_bad_weight():
    with pytest.raises(ParameterError):
        two_goal_spec({"A": 0.0})


def test_assemble_rows_for_patrol_problems(golden_scenario):
    dyn = golden_scenario.dynamics
    params = golden_scenario.params
    x = golden_scenario.initial_state
    for label in ("R1", "R2"):
        rows = assemble_problem_rows(golden_scenario.problems[label], dyn, params, x)
        assert len(rows) == 4
        assert [r.tag.kind for r in rows] == [COMPOSITE, INVARIANCE, INVARIANCE, INVARIANCE]
        assert {r.tag.barrier_id for r in rows[1:]} == {"globe", "not_pi1O", "not_pi2O"}


def test_assemble_rows_single_unbounded_goal():
    dyn = ControlAffineDynamics.single_integrator(1, 2)
    problem = ReachabilityProblem(CompositeGoalSpec(unbounded=(disc(bounded_above=None),)))
    rows = assemble_problem_rows(problem, dyn, FtcbfParams(), state((2.0, 0.0)))
    assert len(rows) == 1 and rows[0].tag.kind == INDIVIDUAL_GOAL


def test_individual_only_rows_split_the_composite():
    dyn = ControlAffineDynamics.single_integrator(2, 2)
    problem = ReachabilityProblem(two_goal_spec(), safety=(disc("keep", 0, scale=0.01),))
    rows = individual_only_rows(problem, dyn, FtcbfParams(), state((2.0, 0.0), (2.0, 0.0)))
    assert [r.tag.kind for r in rows] == [INDIVIDUAL_GOAL, INDIVIDUAL_GOAL, INVARIANCE]
    A, b = rows_to_arrays(rows, 4)
    assert A.shape == (3, 4) and b.shape == (3,)


@pytest.mark.parametrize("h0, gamma, rho, expected", [(-1.0, 2.0, 0.0, 0.5), (-4.0, 1.0, 0.5, 4.0), (0.7, 1.0, 0.5, 0.0)])
def test_reach_time_bound(h0, gamma, rho, expected):
    assert reach_time_bound(h0, FtcbfParams(gamma, rho)) == pytest.approx(expected)


def test_time_diagnostics():
    spec = CompositeGoalSpec.from_barriers([disc("A"), disc("far", bounded_above=None, center=(0.0, 1.0))])
    x = state((2.0, 0.0))
    params = FtcbfParams(1.0, 0.5)
    bounds = individual_time_bounds(spec, params, x)
    assert bounds == {"far": pytest.approx(reach_time_bound(-4.0, params))}
    # T' = 4, then the bounded sum climbs from -3 to its ceiling 1 at rate gamma.
    assert composite_time_estimate(spec, params, x) == pytest.approx(4.0 + 4.0)
    assert composite_time_estimate(CompositeGoalSpec(unbounded=(disc(bounded_above=None),)), params, x) is None
