import numpy as np
import pytest

from ftcbf.api.barriers import CustomBarrier
from ftcbf.api.verify import SuiteRouter, VerificationSuite, VerifyContext, default_suites
from ftcbf.api.verify.suites import (
    FeasibilitySuite,
    GradientSuite,
    InvarianceSuite,
    ReachTimeSuite,
    TraceSuite,
    reach_problem,
)
from ftcbf.models.reports import SuiteResult


class ExplodingSuite(VerificationSuite):
    name = "exploding"

    def run(self, context):
        raise RuntimeError("boom")


def test_router_registration():
    router = SuiteRouter()
    assert list(router.suites) == ["gradient", "qp", "reach-time", "invariance", "trace", "feasibility"]
    with pytest.raises(ValueError):
        router.register(TraceSuite())
    with pytest.raises(ValueError):
        router.route("nope")
    assert len(default_suites()) == 6


def test_scenario_suites_need_a_model():
    report = SuiteRouter([InvarianceSuite(), FeasibilitySuite()]).run(VerifyContext())
    assert not report.passed
    assert all(s.failures == ["no scenario given"] for s in report.suites)


def test_suite_exceptions_become_failures():
    report = SuiteRouter([ExplodingSuite(), TraceSuite()]).run(VerifyContext(seed=4))
    assert not report.passed
    assert report.suite("exploding").failures == ["RuntimeError: boom"]
    assert report.suite("trace").passed


def test_reach_problem_start_level():
    problem, x0 = reach_problem(-3.0)
    assert problem.goal_barriers[0].value(x0) == pytest.approx(-3.0)
    assert not problem.goal.bounded


def test_reach_time_suite_passes():
    result = ReachTimeSuite().run(VerifyContext())
    assert result.passed, result.failures
    assert result.cases == 3
    assert result.worst["time_ratio"] <= 1.05


def test_gradient_suite_flags_extra_barrier(shuttle_model):
    wrong = CustomBarrier("wrong", lambda flat: float(flat @ flat), lambda flat: np.array(flat))
    context = VerifyContext(model=shuttle_model, extra_barriers=[(wrong, 1, 2)])
    result = GradientSuite().run(context)
    assert not result.passed
    assert result.failures == [f"barrier 'wrong': relative gradient error {result.worst['wrong']:.3e}"]
    assert result.worst["wrong"] == pytest.approx(1.0, abs=1e-6)


def test_scenario_suites_on_shuttle(shuttle_model):
    context = VerifyContext(model=shuttle_model)
    report = SuiteRouter([InvarianceSuite(), FeasibilitySuite()]).run(context)
    assert report.passed, [s.failures for s in report.suites]
    assert report.scenario == "shuttle"
    assert context.scenario_run() is context.scenario_run()


def test_invariance_suite_with_active_obstacle(detour_model):
    result = InvarianceSuite().run(VerifyContext(model=detour_model))
    assert result.passed, result.failures
    assert result.worst["safety_min"] >= -1e-3


def test_sweep_halves_dt(shuttle_model):
    context = VerifyContext(model=shuttle_model, sweep=True)
    result = InvarianceSuite().run(context)
    assert result.passed, result.failures
    assert set(context._runs) == {0.02, 0.01}


def test_report_lookup():
    report = SuiteRouter([TraceSuite()]).run(VerifyContext())
    assert isinstance(report.suite("trace"), SuiteResult)
    assert report.suite("qp") is None
