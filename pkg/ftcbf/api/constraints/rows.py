"""Linear constraints on the stacked control input built from finite-time barriers.

Each row reads normal . u >= offset. A barrier h with parameters (gamma, rho)
contributes the individual row

    L_f h + L_g h u + gamma sign(h) |h|^rho >= 0,

and a set of bounded goal barriers with weights alpha contributes one
composite row

    sum alpha_i (L_f h_i + L_g h_i u) + gamma sign(min_i h_i) >= 0.
"""
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ftcbf.api.barriers.functions import BarrierFunction
from ftcbf.api.barriers.geometry import StackedState
from ftcbf.api.constraints.dynamics import ControlAffineDynamics, lie_derivatives
from ftcbf.core.errors import BarrierEvaluationError, ParameterError

if TYPE_CHECKING:
    from ftcbf.api.task.problems import ReachabilityProblem

logger = logging.getLogger(__name__)

COMPOSITE = "composite"
INDIVIDUAL_GOAL = "individual-goal"
INVARIANCE = "invariance"
BOUND = "bound"


@dataclass(frozen=True)
class FtcbfParams:
    gamma: float = 1.0
    rho: float = 0.5

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if not 0.0 <= self.rho < 1.0:
            raise ParameterError(f"rho must lie in [0, 1), got {self.rho}")


@dataclass(frozen=True)
class RowTag:
    kind: str
    barrier_id: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.kind}({self.barrier_id})" if self.barrier_id else self.kind


@dataclass(frozen=True)
class ConstraintRow:
    normal: np.ndarray
    offset: float
    tag: RowTag

    def __post_init__(self):
        normal = np.array(self.normal, dtype=float).reshape(-1)
        if not np.all(np.isfinite(normal)) or not np.isfinite(self.offset):
            raise BarrierEvaluationError(f"constraint row {self.tag} has non-finite entries")
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def degenerate(self) -> bool:
        """Zero normal with a positive offset: no control satisfies the row."""
        return not np.any(self.normal) and self.offset > 0

    def residual(self, u: np.ndarray) -> float:
        return float(self.normal @ u - self.offset)

    def satisfied_by(self, u: np.ndarray, tolerance: float = 0.0) -> bool:
        return self.residual(u) >= -tolerance


@dataclass(frozen=True)
class CompositeGoalSpec:
    """Goal barriers split into the bounded ones (composed, weighted) and the rest."""

    bounded: Tuple[Tuple[BarrierFunction, float], ...] = ()
    unbounded: Tuple[BarrierFunction, ...] = ()

    def __post_init__(self):
        if not self.bounded and not self.unbounded:
            raise ParameterError("a goal specification needs at least one barrier")
        for barrier, alpha in self.bounded:
            if not barrier.is_bounded:
                raise ParameterError(f"barrier '{barrier.id}' is not bounded above and cannot be composed")
            if not alpha > 0:
                raise ParameterError(f"weight for '{barrier.id}' must be > 0, got {alpha}")

    @classmethod
    def from_barriers(cls, barriers: Iterable[BarrierFunction], alphas: Optional[dict] = None) -> "CompositeGoalSpec":
        """Split by each barrier's `bounded_above` metadata; weights default to 1."""
        alphas = alphas or {}
        bounded, unbounded = [], []
        for barrier in barriers:
            if barrier.is_bounded:
                bounded.append((barrier, float(alphas.get(barrier.id, 1.0))))
            else:
                unbounded.append(barrier)
        return cls(tuple(bounded), tuple(unbounded))

    @property
    def barriers(self) -> Tuple[BarrierFunction, ...]:
        return tuple(b for b, _ in self.bounded) + self.unbounded

    def weighted_sum(self, x: StackedState) -> float:
        return float(sum(alpha * b.value(x) for b, alpha in self.bounded))

    def weighted_gradient(self, x: StackedState) -> np.ndarray:
        return sum(alpha * b.gradient(x) for b, alpha in self.bounded)

    def min_bounded(self, x: StackedState) -> float:
        return min(b.value(x) for b, _ in self.bounded)


def sign_pow(h: float, gamma: float, rho: float) -> float:
    """gamma * sign(h) * |h|^rho, exactly 0 at h = 0 for every rho."""
    if not gamma > 0 or not 0.0 <= rho < 1.0:
        raise ParameterError(f"invalid finite-time parameters gamma={gamma}, rho={rho}")
    if h == 0.0:
        return 0.0
    return float(gamma * np.sign(h) * abs(h) ** rho)


def _barrier_value(h: BarrierFunction, x: StackedState) -> float:
    value = h.value(x)
    if not np.isfinite(value):
        raise BarrierEvaluationError(f"barrier '{h.id}' is not finite at the current state", {"barrier": h.id})
    return value


def individual_row(
    h: BarrierFunction,
    dyn: ControlAffineDynamics,
    params: FtcbfParams,
    x: StackedState,
    kind: str = INDIVIDUAL_GOAL,
) -> ConstraintRow:
    """
    One finite-time row: Lg h . u >= -Lf h - gamma * sign(h) * |h|^rho.

    Args:
        h: Goal or safety barrier.
        dyn: Control-affine dynamics supplying the Lie derivatives.
        params: gamma > 0 and rho in [0, 1).
        x: Stacked state the row is evaluated at.
        kind: Tag kind, individual-goal or invariance.

    Returns:
        The ConstraintRow. It is degenerate (zero normal) where the gradient vanishes.
    """
    value = _barrier_value(h, x)
    lf, lg = lie_derivatives(h, dyn, x)
    row = ConstraintRow(lg, -lf - sign_pow(value, params.gamma, params.rho), RowTag(kind, h.id))
    if row.degenerate:
        logger.debug("Row %s is pointwise infeasible (h=%.6g, zero gradient)", row.tag, value)
    return row


def composite_row(spec: CompositeGoalSpec, dyn: ControlAffineDynamics, gamma: float, x: StackedState) -> ConstraintRow:
    """
    Single row for all bounded goals: sum alpha Lg h . u >= -sum alpha Lf h - gamma * sign(min h).

    Raises:
        ParameterError: If the spec has no bounded goals or gamma is not positive.
    """
    # No |.|^rho factor on the composite sign term.
    if not spec.bounded:
        raise ParameterError("composite row needs at least one bounded goal barrier")
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    normal = np.zeros(dyn.control_dim)
    drift_term = 0.0
    values = []
    for barrier, alpha in spec.bounded:
        values.append(_barrier_value(barrier, x))
        lf, lg = lie_derivatives(barrier, dyn, x)
        normal = normal + alpha * lg
        drift_term += alpha * lf
    offset = -drift_term - gamma * float(np.sign(min(values)))
    ids = "+".join(b.id for b, _ in spec.bounded)
    return ConstraintRow(normal, offset, RowTag(COMPOSITE, ids))


def assemble_problem_rows(
    problem: "ReachabilityProblem",
    dyn: ControlAffineDynamics,
    params: FtcbfParams,
    x: StackedState,
) -> List[ConstraintRow]:
    """Composite goal row (if any bounded goals), one row per unbounded goal, one per safety barrier."""
    rows = []
    if problem.goal.bounded:
        rows.append(composite_row(problem.goal, dyn, params.gamma, x))
    rows.extend(individual_row(h, dyn, params, x, INDIVIDUAL_GOAL) for h in problem.goal.unbounded)
    rows.extend(individual_row(h, dyn, params, x, INVARIANCE) for h in problem.safety)
    return rows


def individual_only_rows(
    problem: "ReachabilityProblem",
    dyn: ControlAffineDynamics,
    params: FtcbfParams,
    x: StackedState,
) -> List[ConstraintRow]:
    """Every goal barrier as its own row, the formulation without composition."""
    rows = [individual_row(h, dyn, params, x, INDIVIDUAL_GOAL) for h in problem.goal.barriers]
    rows.extend(individual_row(h, dyn, params, x, INVARIANCE) for h in problem.safety)
    return rows


def reach_time_bound(h0: float, params: FtcbfParams) -> float:
    """Upper bound on the time to reach {h >= 0} under the individual row."""
    if h0 >= 0:
        return 0.0
    exponent = 1.0 - params.rho
    return abs(h0) ** exponent / (params.gamma * exponent)


def composite_time_estimate(spec: CompositeGoalSpec, params: FtcbfParams, x: StackedState) -> Optional[float]:
    """Diagnostic estimate T' + (sum alpha M - sum alpha h(x)) / gamma.

    T' is the largest individual bound over the unbounded goals. The weighted
    sum is taken at x rather than at x(T'), so this is an estimate only.
    """
    if not spec.bounded:
        return None
    t_prime = max((reach_time_bound(h.value(x), params) for h in spec.unbounded), default=0.0)
    ceiling = sum(alpha * b.bounded_above for b, alpha in spec.bounded)
    return t_prime + max(0.0, ceiling - spec.weighted_sum(x)) / params.gamma


def individual_time_bounds(spec: CompositeGoalSpec, params: FtcbfParams, x: StackedState) -> dict:
    return {h.id: reach_time_bound(h.value(x), params) for h in spec.unbounded}


def rows_to_arrays(rows: Sequence[ConstraintRow], control_dim: int) -> Tuple[np.ndarray, np.ndarray]:
    if not rows:
        return np.zeros((0, control_dim)), np.zeros(0)
    return np.vstack([r.normal for r in rows]), np.array([r.offset for r in rows])
