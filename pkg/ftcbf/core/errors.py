from typing import Any, Dict, List, Optional


class FtcbfError(Exception):
    """Base error. `details` carries a structured payload for reports and logs."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


class DimensionError(FtcbfError):
    pass


class ParameterError(FtcbfError):
    pass


class BarrierEvaluationError(FtcbfError):
    pass


class UnknownPropositionError(FtcbfError):
    pass


class EmptyGoalError(FtcbfError):
    pass


class PreconditionError(FtcbfError):
    pass


class ConfigurationError(FtcbfError):
    pass


class QpFailure(FtcbfError):
    """Raised by the simulation loop when the controller QP cannot be solved.

    `partial_result` holds the SimResult accumulated up to the failing step.
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None, partial_result: Any = None):
        super().__init__(message, details)
        self.partial_result = partial_result


class QpInfeasibleError(QpFailure):
    pass


class QpIterationLimitError(QpFailure):
    pass


class ScenarioValidationError(FtcbfError):
    """Schema or reference failure in a scenario file, addressed by JSON pointers."""

    def __init__(self, problems: List[Dict[str, str]]):
        summary = "; ".join(f"{p['pointer']}: {p['message']}" for p in problems)
        super().__init__(f"Invalid scenario: {summary}", {"problems": problems})
        self.problems = problems
