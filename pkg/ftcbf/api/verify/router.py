import logging
import time
from typing import Dict, Iterable, List, Optional

from ftcbf.api.verify.suites import (
    FeasibilitySuite,
    GradientSuite,
    InvarianceSuite,
    QpSuite,
    ReachTimeSuite,
    TraceSuite,
    VerificationSuite,
    VerifyContext,
)
from ftcbf.models.reports import SuiteResult, VerifyReport

logger = logging.getLogger(__name__)


class SuiteRouter:
    """Routes `verify` to the registered suites and collects their results into one report."""

    def __init__(self, suites: Optional[Iterable[VerificationSuite]] = None):
        self.suites: Dict[str, VerificationSuite] = {}
        for suite in suites if suites is not None else default_suites():
            self.register(suite)

    def register(self, suite: VerificationSuite) -> None:
        if suite.name in self.suites:
            raise ValueError(f"suite '{suite.name}' is already registered")
        self.suites[suite.name] = suite

    def route(self, name: str) -> VerificationSuite:
        suite = self.suites.get(name)
        if suite is None:
            raise ValueError(f"Unknown suite '{name}'. Available: {', '.join(self.suites)}")
        return suite

    def run(self, context: VerifyContext, names: Optional[List[str]] = None) -> VerifyReport:
        selected = [self.route(n) for n in names] if names else list(self.suites.values())
        results: List[SuiteResult] = []
        for suite in selected:
            if suite.needs_scenario and context.model is None:
                results.append(SuiteResult(name=suite.name, passed=False, failures=["no scenario given"]))
                continue
            started = time.perf_counter()
            try:
                result = suite.run(context)
            except Exception as e:
                logger.exception("Suite '%s' raised", suite.name)
                result = SuiteResult(name=suite.name, passed=False, failures=[f"{type(e).__name__}: {e}"])
            elapsed = time.perf_counter() - started
            logger.info("Suite %-12s %s in %.1fs", suite.name, "passed" if result.passed else "FAILED", elapsed)
            results.append(result)
        return VerifyReport(
            passed=all(r.passed for r in results),
            sweep=context.sweep,
            scenario=context.model.name if context.model else None,
            suites=results,
        )


def default_suites() -> List[VerificationSuite]:
    return [GradientSuite(), QpSuite(), ReachTimeSuite(), InvarianceSuite(), TraceSuite(), FeasibilitySuite()]
