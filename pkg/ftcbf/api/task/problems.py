from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from ftcbf.api.barriers.functions import BarrierFunction
from ftcbf.api.barriers.geometry import StackedState
from ftcbf.api.barriers.propositions import Workspace
from ftcbf.api.constraints.rows import CompositeGoalSpec
from ftcbf.core.errors import EmptyGoalError, ParameterError

PropositionSet = FrozenSet[str]


def proposition_set(ids: Iterable[str] = ()) -> PropositionSet:
    return frozenset(ids)


@dataclass(frozen=True)
class Waypoint:
    """What a trace entry must show: every `positive` proposition true, every `negative` one false."""

    positive: PropositionSet = frozenset()
    negative: PropositionSet = frozenset()

    def matches(self, valuation: PropositionSet) -> bool:
        return self.positive <= valuation and not (self.negative & valuation)

    @classmethod
    def coerce(cls, value) -> "Waypoint":
        if isinstance(value, Waypoint):
            return value
        return cls(frozenset(value))


@dataclass(frozen=True)
class InducedProblemSpec:
    """Proposition valuations before (a1) and after (a2) a reachability step."""

    a1_true: PropositionSet = frozenset()
    a1_false: PropositionSet = frozenset()
    a2_true: PropositionSet = frozenset()
    a2_false: PropositionSet = frozenset()
    label: str = ""

    def __post_init__(self):
        for name in ("a1_true", "a1_false", "a2_true", "a2_false"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.a1_true & self.a1_false:
            raise ParameterError(f"problem '{self.label}': a1 sets overlap on {sorted(self.a1_true & self.a1_false)}")
        if self.a2_true & self.a2_false:
            raise ParameterError(f"problem '{self.label}': a2 sets overlap on {sorted(self.a2_true & self.a2_false)}")

    @property
    def waypoint(self) -> Waypoint:
        return Waypoint(self.a2_true, self.a2_false)


@dataclass(frozen=True)
class ReachabilityProblem:
    """Reach the goal set while every safety barrier stays nonnegative."""

    goal: CompositeGoalSpec
    safety: Tuple[BarrierFunction, ...] = ()
    label: str = ""
    waypoint: Optional[Waypoint] = None

    def __post_init__(self):
        object.__setattr__(self, "safety", tuple(self.safety))

    @property
    def goal_barriers(self) -> Tuple[BarrierFunction, ...]:
        return self.goal.barriers


def induce_problem(
    spec: InducedProblemSpec,
    workspace: Workspace,
    alphas: Optional[Dict[str, float]] = None,
) -> ReachabilityProblem:
    """
    Turn a before/after proposition requirement into a reachability problem.

    Goal: propositions newly required true or newly required false.
    Safety: propositions required true (or false) both before and after.
    Negated propositions enter as epsilon-complement barriers.

    Args:
        spec: Proposition sets required before (a1) and after (a2) the transition.
        workspace: Registry the proposition ids are looked up in.
        alphas: Optional weights of the bounded goal barriers, by barrier id.

    Returns:
        The ReachabilityProblem labelled and waypointed from spec.

    Raises:
        UnknownPropositionError: If spec names a proposition the workspace lacks.
        EmptyGoalError: If nothing new has to become true or false.
    """
    for prop_id in spec.a1_true | spec.a1_false | spec.a2_true | spec.a2_false:
        workspace.proposition(prop_id)

    goal = [workspace.barrier(p) for p in sorted(spec.a2_true - spec.a1_true)]
    goal += [workspace.complement(p) for p in sorted(spec.a2_false - spec.a1_false)]
    if not goal:
        raise EmptyGoalError(f"problem '{spec.label}' has nothing new to reach", {"problem": spec.label})

    safety = [workspace.barrier(p) for p in sorted(spec.a1_true & spec.a2_true)]
    safety += [workspace.complement(p) for p in sorted(spec.a1_false & spec.a2_false)]
    return ReachabilityProblem(
        goal=CompositeGoalSpec.from_barriers(goal, alphas),
        safety=tuple(safety),
        label=spec.label,
        waypoint=spec.waypoint,
    )


class Membership(str, Enum):
    IN_GOAL = "in_goal"
    IN_SAFETY = "in_safety"
    BOTH = "both"
    NEITHER = "neither"


def in_goal(x: StackedState, problem: ReachabilityProblem, margin: float = 0.0) -> bool:
    return all(h.value(x) >= margin for h in problem.goal_barriers)


def in_safety(x: StackedState, problem: ReachabilityProblem) -> bool:
    return all(h.value(x) >= 0.0 for h in problem.safety)


def membership(x: StackedState, problem: ReachabilityProblem) -> Membership:
    """Where x lies relative to the goal set and the safety set of problem."""
    goal, safe = in_goal(x, problem), in_safety(x, problem)
    if goal and safe:
        return Membership.BOTH
    if goal:
        return Membership.IN_GOAL
    if safe:
        return Membership.IN_SAFETY
    return Membership.NEITHER


@dataclass(frozen=True)
class LassoSequence:
    """prefix (R_1..R_k) followed by suffix (R_k+1..R_k+l) repeated forever."""

    prefix: Tuple[ReachabilityProblem, ...] = ()
    suffix: Tuple[ReachabilityProblem, ...] = field(default_factory=tuple)
    ltl_comment: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "suffix", tuple(self.suffix))
        if not self.suffix:
            raise ParameterError("a lasso sequence needs a non-empty suffix")

    def first(self) -> ReachabilityProblem:
        return self.prefix[0] if self.prefix else self.suffix[0]

    def position_after(self, in_prefix: bool, index: int) -> Tuple[bool, int, bool]:
        """Where the executive goes after finishing problem `index`.

        Returns (in_prefix, index, completed_cycle).
        """
        if in_prefix and index + 1 < len(self.prefix):
            return True, index + 1, False
        if in_prefix:
            return False, 0, False
        if index + 1 < len(self.suffix):
            return False, index + 1, False
        return False, 0, True

    def problem_at(self, in_prefix: bool, index: int) -> ReachabilityProblem:
        return self.prefix[index] if in_prefix else self.suffix[index]

    def waypoints(self) -> Tuple[Tuple[Waypoint, ...], Tuple[Waypoint, ...]]:
        def points(problems):
            return tuple(p.waypoint or Waypoint() for p in problems)

        return points(self.prefix), points(self.suffix)
