from ftcbf.api.task.problems import (
    InducedProblemSpec,
    LassoSequence,
    Membership,
    PropositionSet,
    ReachabilityProblem,
    Waypoint,
    induce_problem,
    membership,
    proposition_set,
)
from ftcbf.api.task.trace import (
    LassoVerdict,
    TraceEntry,
    TraceRecord,
    brute_force_lasso_match,
    check_lasso,
    compress,
    record_sample,
)

__all__ = [
    "InducedProblemSpec",
    "LassoSequence",
    "LassoVerdict",
    "Membership",
    "PropositionSet",
    "ReachabilityProblem",
    "TraceEntry",
    "TraceRecord",
    "Waypoint",
    "brute_force_lasso_match",
    "check_lasso",
    "compress",
    "induce_problem",
    "membership",
    "proposition_set",
]
