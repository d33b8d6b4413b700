"""Property suites run by `verify`. Each returns a SuiteResult; failures are data, not exceptions."""
import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ftcbf.api.barriers.expressions import expression_barrier
from ftcbf.api.barriers.functions import BarrierFunction, ConnectivityBarrier, QuadraticBarrier, gradient_relative_error
from ftcbf.api.barriers.geometry import QuadraticRegion, StackedState
from ftcbf.api.constraints.dynamics import ControlAffineDynamics
from ftcbf.api.constraints.rows import CompositeGoalSpec, ConstraintRow, FtcbfParams, RowTag, reach_time_bound
from ftcbf.api.qp.minnorm import DEFAULT_SETTINGS, QpProblem, QpStatus, enumerate_active_sets, solve, verify_kkt
from ftcbf.api.sim.builder import Scenario, build_scenario
from ftcbf.api.sim.engine import SimConfig, SimResult, feasibility_comparison, reach_time, run, segment_progress
from ftcbf.api.task.problems import ReachabilityProblem, Waypoint
from ftcbf.api.task.trace import TraceRecord, brute_force_lasso_match, check_lasso, compress, record_sample
from ftcbf.core.config import QpSettings
from ftcbf.core.errors import FtcbfError
from ftcbf.models.reports import SuiteResult
from ftcbf.models.scenario import ScenarioFile

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-5
QP_TOLERANCE = 1e-7
SAFETY_FLOOR = -1e-3
PROGRESS_SLACK = 1e-6
REACH_SLACK = 1.05

DEFAULT_REACH_GRID = ((1.0, 0.5),)
SWEEP_REACH_GRID = tuple(itertools.product((0.5, 1.0, 2.0), (0.0, 0.25, 0.5, 0.75)))
REACH_START_LEVELS = (-0.5, -1.0, -3.0)


@dataclass
class VerifyContext:
    """Shared inputs of one `verify` invocation; the scenario's runs are cached across suites."""

    model: Optional[ScenarioFile] = None
    sweep: bool = False
    seed: int = 0
    qp_settings: QpSettings = DEFAULT_SETTINGS
    # Barriers checked by the gradient suite on top of the built-in kinds: (barrier, n_agents, dim).
    extra_barriers: List[Tuple[BarrierFunction, int, int]] = field(default_factory=list)
    _scenario: Optional[Scenario] = None
    _runs: Dict[float, SimResult] = field(default_factory=dict)

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)

    @property
    def scenario(self) -> Optional[Scenario]:
        if self._scenario is None and self.model is not None:
            self._scenario = build_scenario(self.model)
        return self._scenario

    def scenario_run(self, dt: Optional[float] = None) -> SimResult:
        config = SimConfig.from_scenario(self.model)
        if dt is not None:
            config = SimConfig(dt, config.max_time, config.params, config.goal_switch_margin, config.suffix_cycles_target)
        if config.dt not in self._runs:
            logger.info("Simulating '%s' with dt=%g", self.model.name, config.dt)
            self._runs[config.dt] = run(self.scenario, config, self.qp_settings)
        return self._runs[config.dt]


class VerificationSuite(ABC):
    name: str = ""
    needs_scenario: bool = False

    @abstractmethod
    def run(self, context: VerifyContext) -> SuiteResult:
        """Evaluate the suite's properties."""


def _random_pd(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.normal(size=(n, n))
    p = m @ m.T + n * np.eye(n)
    return 0.5 * (p + p.T)


class GradientSuite(VerificationSuite):
    """Analytic gradients of every barrier kind against central differences."""

    name = "gradient"
    samples = 100

    def _builtin_barriers(self, rng: np.random.Generator) -> List[Tuple[BarrierFunction, int, int]]:
        planar = QuadraticBarrier("quadratic-2d", 0, QuadraticRegion(rng.uniform(-1, 1, 2), _random_pd(rng, 2)))
        spatial = QuadraticBarrier("quadratic-3d", 1, QuadraticRegion(rng.uniform(-1, 1, 3), _random_pd(rng, 3)))
        custom = expression_barrier(
            "expression",
            "1 - p0[0]**2 - 2*p0[1]**2 + p0[0]*p1[1]",
            ["-2*p0[0] + p1[1]", "-4*p0[1]", "0", "p0[0]"],
            n_agents=2,
            dim=2,
        )
        return [
            (planar, 1, 2),
            (planar.complement(0.05), 1, 2),
            (spatial, 2, 3),
            (ConnectivityBarrier("connectivity", (0, 1), 1.5, 0.25), 2, 2),
            (ConnectivityBarrier("connectivity-axis1", (1, 0), 0.5, 0.1, axis=1), 2, 3),
            (custom, 2, 2),
        ]

    def _scenario_barriers(self, scenario: Optional[Scenario]) -> List[Tuple[BarrierFunction, int, int]]:
        if scenario is None:
            return []
        ws = scenario.workspace
        barriers = [(ws.barrier(p), ws.n_agents, ws.dim) for p in ws.proposition_ids]
        return barriers + [(ws.complement(p), ws.n_agents, ws.dim) for p in ws.proposition_ids]

    def run(self, context: VerifyContext) -> SuiteResult:
        rng = context.rng(1)
        cases = self._builtin_barriers(rng) + self._scenario_barriers(context.scenario) + context.extra_barriers
        failures, worst = [], {}
        for barrier, n_agents, dim in cases:
            errors = [
                gradient_relative_error(barrier, StackedState(rng.uniform(-2.0, 2.0, (n_agents, dim))))
                for _ in range(self.samples)
            ]
            worst[barrier.id] = max(errors)
            if worst[barrier.id] >= GRADIENT_TOLERANCE:
                failures.append(f"barrier '{barrier.id}': relative gradient error {worst[barrier.id]:.3e}")
        return SuiteResult(
            name=self.name,
            passed=not failures,
            cases=len(cases) * self.samples,
            failures=failures,
            worst={"relative_error": max(worst.values(), default=0.0), **worst},
        )


class QpSuite(VerificationSuite):
    """Random small QPs against exhaustive active-set enumeration, KKT residuals and determinism."""

    name = "qp"
    cases = 500

    def _instance(self, rng: np.random.Generator) -> QpProblem:
        dim = int(rng.integers(1, 5))
        n_rows = int(rng.integers(0, dim + 3))
        rows = []
        for i in range(n_rows):
            normal = np.zeros(dim) if rng.random() < 0.03 else rng.normal(size=dim)
            rows.append(ConstraintRow(normal, float(rng.uniform(-1.0, 1.0)), RowTag("random", str(i))))
        return QpProblem(tuple(rows), dim)

    def run(self, context: VerifyContext) -> SuiteResult:
        rng = context.rng(2)
        failures: List[str] = []
        worst = {"solution_error": 0.0, "feasibility": 0.0, "stationarity": 0.0, "complementarity": 0.0}
        infeasible = 0
        for case in range(self.cases):
            problem = self._instance(rng)
            solution = solve(problem, context.qp_settings)
            repeat = solve(problem, context.qp_settings)
            reference = enumerate_active_sets(problem)
            if not (np.array_equal(solution.u, repeat.u) and solution.status is repeat.status):
                failures.append(f"case {case}: repeated solve differs")
            if reference is None:
                infeasible += 1
                if solution.status is not QpStatus.INFEASIBLE:
                    failures.append(f"case {case}: oracle infeasible, solver returned {solution.status.value}")
                continue
            if not solution.optimal:
                failures.append(f"case {case}: oracle feasible, solver returned {solution.status.value}")
                continue
            error = float(np.linalg.norm(solution.u - reference))
            kkt = verify_kkt(problem, solution)
            worst["solution_error"] = max(worst["solution_error"], error)
            worst["feasibility"] = max(worst["feasibility"], kkt.feasibility)
            worst["stationarity"] = max(worst["stationarity"], kkt.stationarity)
            worst["complementarity"] = max(worst["complementarity"], kkt.complementarity)
            if error > QP_TOLERANCE:
                failures.append(f"case {case}: |u - u_oracle| = {error:.3e}")
            if not kkt.within():
                failures.append(f"case {case}: KKT residuals {kkt}")
        return SuiteResult(
            name=self.name,
            passed=not failures,
            cases=self.cases,
            failures=failures,
            worst=worst,
            notes=[f"{infeasible} of {self.cases} random instances were infeasible"],
        )


def reach_problem(level: float) -> Tuple[ReachabilityProblem, StackedState]:
    """Single agent, unit disc goal treated as unbounded, started where h = level."""
    goal = QuadraticBarrier("disc", 0, QuadraticRegion(np.zeros(2), np.eye(2)), bounded_above=None)
    problem = ReachabilityProblem(CompositeGoalSpec(unbounded=(goal,)), label=f"reach({level:g})")
    return problem, StackedState(np.array([[np.sqrt(1.0 - level), 0.0]]))


class ReachTimeSuite(VerificationSuite):
    """Measured reach times against |h0|^(1-rho) / (gamma (1-rho))."""

    name = "reach-time"
    dt = 0.01

    def run(self, context: VerifyContext) -> SuiteResult:
        grid = SWEEP_REACH_GRID if context.sweep else DEFAULT_REACH_GRID
        dyn = ControlAffineDynamics.single_integrator(1, 2)
        failures, worst_ratio, cases = [], 0.0, 0
        for (gamma, rho), level in itertools.product(grid, REACH_START_LEVELS):
            cases += 1
            params = FtcbfParams(gamma, rho)
            problem, x0 = reach_problem(level)
            bound = reach_time_bound(level, params)
            measured = reach_time(problem, x0, dyn, params, self.dt, 2.0 * bound + 1.0, context.qp_settings)
            label = f"gamma={gamma:g} rho={rho:g} h0={level:g}"
            if measured is None:
                failures.append(f"{label}: goal not reached within {2.0 * bound + 1.0:.2f}s")
                continue
            worst_ratio = max(worst_ratio, (measured - self.dt) / bound)
            if measured > bound * REACH_SLACK + self.dt:
                failures.append(f"{label}: reached at {measured:.3f}s, bound {bound:.3f}s")
        return SuiteResult(
            name=self.name, passed=not failures, cases=cases, failures=failures, worst={"time_ratio": worst_ratio}
        )


def progress_failures(scenario: Scenario, result: SimResult, dt: float) -> Tuple[List[str], Dict[str, float]]:
    """Rate and per-step increment of the weighted goal sum on every pre-goal step."""
    gamma = scenario.params.gamma
    failures = []
    # literal_increment_deficit leaves out the explicit-Euler curvature term; it is reported, not checked.
    worst = {"rate_deficit": 0.0, "increment_deficit": 0.0, "literal_increment_deficit": 0.0, "euler_identity": 0.0}
    for index, segment in enumerate(result.segments):
        if segment.stop <= segment.start or not scenario.problems[segment.label].goal.bounded:
            continue
        series = segment_progress(result, scenario, segment)
        mask = series.pre_goal
        if not mask.any():
            continue
        rate_deficit = float(np.max(gamma - series.rates[mask]))
        increment_deficit = float(np.max(gamma * dt - series.curvature[mask] - series.increments[mask]))
        literal_deficit = float(np.max(gamma * dt - series.increments[mask]))
        identity = float(np.max(np.abs(series.increments - (dt * series.rates - series.curvature))))
        worst["rate_deficit"] = max(worst["rate_deficit"], rate_deficit)
        worst["increment_deficit"] = max(worst["increment_deficit"], increment_deficit)
        worst["literal_increment_deficit"] = max(worst["literal_increment_deficit"], literal_deficit)
        worst["euler_identity"] = max(worst["euler_identity"], identity)
        if rate_deficit > PROGRESS_SLACK:
            failures.append(f"segment {index} ({segment.label}): rate falls {rate_deficit:.3e} below gamma")
        if increment_deficit > PROGRESS_SLACK:
            failures.append(f"segment {index} ({segment.label}): increment falls {increment_deficit:.3e} short")
    return failures, worst


class InvarianceSuite(VerificationSuite):
    """The scenario run: acceptance, safety floor, monotone goal progress, trace replay, dt halving."""

    name = "invariance"
    needs_scenario = True

    def run(self, context: VerifyContext) -> SuiteResult:
        scenario = context.scenario
        config = SimConfig.from_scenario(context.model)
        failures, notes = [], []
        try:
            result = context.scenario_run()
        except FtcbfError as e:
            return SuiteResult(name=self.name, passed=False, failures=[f"run failed: {e.message}"])

        if result.status != "accept":
            failures.append(f"verdict {result.status}: {result.verdict.message if result.verdict else ''}")
        worst_safety = min((v.value for v in result.violation_log), default=0.0)
        if worst_safety < SAFETY_FLOOR:
            failures.append(f"safety barrier dropped to {worst_safety:.3e}")

        progress, worst = progress_failures(scenario, result, config.dt)
        failures += progress

        replay = TraceRecord()
        for k, t in enumerate(result.times):
            record_sample(replay, result.state(k), t, scenario.workspace)
        if replay.entries != result.trace.entries:
            failures.append("replayed trace differs from the recorded one")

        if context.sweep:
            half = context.scenario_run(config.dt / 2)
            if half.status != result.status:
                failures.append(f"verdict changed from {result.status} to {half.status} with dt={config.dt / 2:g}")
            notes.append(f"dt={config.dt / 2:g}: {half.status}, {half.cycles_completed} cycles")

        worst["safety_min"] = worst_safety
        notes.append(f"{result.cycles_completed} suffix cycles in {result.steps} samples")
        return SuiteResult(
            name=self.name, passed=not failures, cases=result.steps, failures=failures, worst=worst, notes=notes
        )


def _random_waypoints(rng: np.random.Generator, alphabet: Sequence[str], count: int) -> List[Waypoint]:
    points = []
    for _ in range(count):
        marks = rng.integers(0, 3, len(alphabet))
        points.append(
            Waypoint(
                frozenset(p for p, m in zip(alphabet, marks) if m == 1),
                frozenset(p for p, m in zip(alphabet, marks) if m == 2),
            )
        )
    return points


class TraceSuite(VerificationSuite):
    """Compression and lasso matching against independent brute-force versions."""

    name = "trace"
    cases = 1000
    alphabet = ("a", "b", "c")

    def run(self, context: VerifyContext) -> SuiteResult:
        rng = context.rng(3)
        failures = []
        accepted = 0
        for case in range(self.cases):
            length = int(rng.integers(0, 16))
            samples = [
                (frozenset(p for p in self.alphabet if rng.random() < 0.5), 0.1 * k) for k in range(length)
            ]
            entries = compress(samples)
            expected = [next(group) for _, group in itertools.groupby(samples, key=lambda s: s[0])]
            if [(e.valuation, e.enter_time) for e in entries] != expected:
                failures.append(f"case {case}: compression differs from grouping")

            trace = TraceRecord()
            for valuation, t in samples:
                trace.record_valuation(valuation, t)
            prefix = _random_waypoints(rng, self.alphabet, int(rng.integers(0, 3)))
            suffix = _random_waypoints(rng, self.alphabet, int(rng.integers(1, 3)))
            cycles = int(rng.integers(1, 3))
            verdict = check_lasso(trace, prefix, suffix, cycles)
            oracle = brute_force_lasso_match(trace.valuations, prefix, suffix, cycles)
            accepted += verdict.accepted
            if verdict.accepted != oracle:
                failures.append(f"case {case}: check_lasso {verdict.status}, brute force {'accept' if oracle else 'reject'}")
        return SuiteResult(
            name=self.name,
            passed=not failures,
            cases=self.cases,
            failures=failures,
            notes=[f"{accepted} of {self.cases} random traces accepted"],
        )


class FeasibilitySuite(VerificationSuite):
    """Composite QP feasible wherever the all-individual QP is, along the scenario run."""

    name = "feasibility"
    needs_scenario = True
    samples = 1000

    def run(self, context: VerifyContext) -> SuiteResult:
        try:
            result = context.scenario_run()
        except FtcbfError as e:
            return SuiteResult(name=self.name, passed=False, failures=[f"run failed: {e.message}"])
        report = feasibility_comparison(result, context.scenario, self.samples, context.qp_settings)
        failures = [
            f"t={c['time']:.3f} ({c['problem']}): individual feasible, composite infeasible at {c['state']}"
            for c in report.counterexamples
        ]
        return SuiteResult(
            name=self.name,
            passed=report.passed,
            cases=report.samples,
            failures=failures,
            notes=[
                f"composite feasible at {report.composite_feasible} of {report.samples} states",
                f"individual feasible at {report.individual_feasible} of {report.samples} states",
            ],
        )
