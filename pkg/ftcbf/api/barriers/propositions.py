from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional

from ftcbf.api.barriers.functions import DEFAULT_EPSILON, BarrierFunction, ComplementBarrier
from ftcbf.api.barriers.geometry import StackedState
from ftcbf.core.errors import DimensionError, ParameterError, UnknownPropositionError


@dataclass(frozen=True)
class AtomicProposition:
    """Boolean label on states: true iff its barrier is nonnegative."""

    id: str
    barrier: BarrierFunction
    # Margin used when the proposition appears negated in a reachability problem.
    epsilon: float = DEFAULT_EPSILON

    def holds(self, x: StackedState) -> bool:
        return self.barrier.value(x) >= 0.0

    def complement(self) -> ComplementBarrier:
        return ComplementBarrier(self.barrier, self.epsilon, f"not_{self.id}")


def holds(prop: AtomicProposition, x: StackedState) -> bool:
    return prop.holds(x)


class Workspace:
    """The agents and the atomic propositions Pi defined over their stacked state."""

    def __init__(self, n_agents: int, dim: int, propositions: Iterable[AtomicProposition]):
        if n_agents < 1 or dim < 1:
            raise DimensionError(f"workspace needs at least one agent and one coordinate, got N={n_agents}, n={dim}")
        self.n_agents = n_agents
        self.dim = dim
        self._propositions: Dict[str, AtomicProposition] = {}
        for prop in propositions:
            if prop.id in self._propositions:
                raise ParameterError(f"duplicate proposition id '{prop.id}'")
            self._propositions[prop.id] = prop

    @property
    def proposition_ids(self) -> tuple:
        return tuple(self._propositions)

    @property
    def propositions(self) -> tuple:
        return tuple(self._propositions.values())

    def proposition(self, prop_id: str) -> AtomicProposition:
        try:
            return self._propositions[prop_id]
        except KeyError:
            raise UnknownPropositionError(f"unknown proposition '{prop_id}'", {"proposition": prop_id}) from None

    def barrier(self, prop_id: str) -> BarrierFunction:
        return self.proposition(prop_id).barrier

    def complement(self, prop_id: str, epsilon: Optional[float] = None) -> ComplementBarrier:
        prop = self.proposition(prop_id)
        if epsilon is None:
            return prop.complement()
        return ComplementBarrier(prop.barrier, epsilon, f"not_{prop_id}")

    def valuation(self, x: StackedState) -> FrozenSet[str]:
        """The unique maximal set of propositions true at x."""
        return frozenset(p.id for p in self._propositions.values() if p.holds(x))

    def check_state(self, x: StackedState) -> None:
        if x.n_agents != self.n_agents or x.dim != self.dim:
            raise DimensionError(
                f"state has {x.n_agents}x{x.dim} coordinates, workspace expects {self.n_agents}x{self.dim}"
            )
