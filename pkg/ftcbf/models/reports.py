from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunSummary(BaseModel):
    """What `run` reports on stdout and stores as summary.json."""

    scenario: str
    status: str  # accept | reject | timeout | infeasible
    verdict_message: str = ""
    stabilized: bool = False
    cycles_completed: int = 0
    steps: int = 0
    final_time: float = 0.0
    max_safety_violation: float = 0.0
    violations: int = 0
    error: Optional[Dict[str, Any]] = None

    def one_line(self) -> str:
        return (
            f"verdict={self.status} cycles={self.cycles_completed} "
            f"max_safety_violation={self.max_safety_violation:.3e} steps={self.steps} t={self.final_time:.2f}"
        )


class SuiteResult(BaseModel):
    name: str
    passed: bool
    cases: int = 0
    failures: List[str] = []
    worst: Dict[str, float] = {}
    notes: List[str] = []


class VerifyReport(BaseModel):
    passed: bool
    sweep: bool = False
    scenario: Optional[str] = None
    created_at: datetime = Field(default_factory=datetime.now)
    suites: List[SuiteResult] = []

    def suite(self, name: str) -> Optional[SuiteResult]:
        return next((s for s in self.suites if s.name == name), None)
