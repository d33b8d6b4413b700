from ftcbf.api.barriers.functions import (
    DEFAULT_EPSILON,
    BarrierFunction,
    ComplementBarrier,
    ConnectivityBarrier,
    CustomBarrier,
    QuadraticBarrier,
    eval_complement,
    eval_connectivity,
    finite_difference_gradient,
    gradient_relative_error,
)
from ftcbf.api.barriers.geometry import AgentState, QuadraticRegion, StackedState, eval_quadratic, grad_quadratic
from ftcbf.api.barriers.propositions import AtomicProposition, Workspace, holds

__all__ = [
    "DEFAULT_EPSILON",
    "AgentState",
    "AtomicProposition",
    "BarrierFunction",
    "ComplementBarrier",
    "ConnectivityBarrier",
    "CustomBarrier",
    "QuadraticBarrier",
    "QuadraticRegion",
    "StackedState",
    "Workspace",
    "eval_complement",
    "eval_connectivity",
    "eval_quadratic",
    "finite_difference_gradient",
    "grad_quadratic",
    "gradient_relative_error",
    "holds",
]
