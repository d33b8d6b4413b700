"""Barrier functions over the stacked multi-agent state.

Every barrier maps a StackedState to a scalar and returns its gradient with
respect to the flattened state (agent 0 coordinates first). The set
{x : h(x) >= 0} is the region the barrier describes.
"""
from abc import ABC, abstractmethod
from typing import Callable, Optional, Tuple

import numpy as np

from ftcbf.api.barriers.geometry import QuadraticRegion, StackedState, eval_quadratic, grad_quadratic
from ftcbf.core.errors import DimensionError, ParameterError

DEFAULT_EPSILON = 0.05


def eval_complement(inner_value: float, epsilon: float) -> float:
    """-h - epsilon: nonnegative only strictly outside the inner region."""
    if not epsilon > 0:
        raise ParameterError(f"complement margin epsilon must be > 0, got {epsilon}")
    return -inner_value - epsilon


def eval_connectivity(x: StackedState, delta1: float, delta2: float, pair: Tuple[int, int], axis: int = 0) -> float:
    """d^2 - ||x_j - x_i||^2 with d^2 = (x_{j,axis} + delta1)^2 + delta2."""
    i, j = _check_pair(x, pair)
    diff = x.agent(j) - x.agent(i)
    radius_sq = (x.agent(j)[axis] + delta1) ** 2 + delta2
    return float(radius_sq - diff @ diff)


def _check_pair(x: StackedState, pair: Tuple[int, int]) -> Tuple[int, int]:
    i, j = pair
    if i == j:
        raise ParameterError(f"connectivity pair must name two distinct agents, got {pair}")
    for index in (i, j):
        if not 0 <= index < x.n_agents:
            raise DimensionError(f"agent index {index} out of range for {x.n_agents} agents")
    return i, j


class BarrierFunction(ABC):
    """A differentiable level-set function h over the stacked state."""

    def __init__(self, barrier_id: str, bounded_above: Optional[float] = None):
        if bounded_above is not None and not bounded_above > 0:
            raise ParameterError(f"bounded_above must be > 0 when given, got {bounded_above}")
        self.id = barrier_id
        self.bounded_above = bounded_above

    @abstractmethod
    def value(self, x: StackedState) -> float:
        ...

    @abstractmethod
    def gradient(self, x: StackedState) -> np.ndarray:
        ...

    @property
    def is_bounded(self) -> bool:
        return self.bounded_above is not None

    def holds(self, x: StackedState) -> bool:
        return self.value(x) >= 0.0

    def complement(self, epsilon: float = DEFAULT_EPSILON, barrier_id: Optional[str] = None) -> "ComplementBarrier":
        return ComplementBarrier(self, epsilon, barrier_id)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.id!r})"


class QuadraticBarrier(BarrierFunction):
    """Agent `agent` inside an ellipsoidal region. Bounded above by 1."""

    def __init__(self, barrier_id: str, agent: int, region: QuadraticRegion, bounded_above: Optional[float] = 1.0):
        super().__init__(barrier_id, bounded_above)
        self.agent = agent
        self.region = region

    def value(self, x: StackedState) -> float:
        return eval_quadratic(self.region, x.agent(self.agent))

    def gradient(self, x: StackedState) -> np.ndarray:
        grad = np.zeros(x.flat.size)
        grad[x.agent_slice(self.agent)] = grad_quadratic(self.region, x.agent(self.agent))
        return grad


class ComplementBarrier(BarrierFunction):
    """-h_inner - epsilon, a conservative inner approximation of the complement."""

    def __init__(self, inner: BarrierFunction, epsilon: float = DEFAULT_EPSILON, barrier_id: Optional[str] = None):
        if not epsilon > 0:
            raise ParameterError(f"complement margin epsilon must be > 0, got {epsilon}")
        super().__init__(barrier_id or f"not_{inner.id}", None)
        self.inner = inner
        self.epsilon = epsilon

    def value(self, x: StackedState) -> float:
        return eval_complement(self.inner.value(x), self.epsilon)

    def gradient(self, x: StackedState) -> np.ndarray:
        return -self.inner.gradient(x)


class ConnectivityBarrier(BarrierFunction):
    """Agents of `pair` within a connectivity radius set by agent pair[1]'s `axis` coordinate."""

    def __init__(self, barrier_id: str, pair: Tuple[int, int], delta1: float, delta2: float, axis: int = 0):
        super().__init__(barrier_id, None)
        if pair[0] == pair[1]:
            raise ParameterError(f"connectivity pair must name two distinct agents, got {pair}")
        self.pair = (int(pair[0]), int(pair[1]))
        self.delta1 = float(delta1)
        self.delta2 = float(delta2)
        self.axis = axis

    def value(self, x: StackedState) -> float:
        if not 0 <= self.axis < x.dim:
            raise DimensionError(f"connectivity axis {self.axis} out of range for dimension {x.dim}")
        return eval_connectivity(x, self.delta1, self.delta2, self.pair, self.axis)

    def gradient(self, x: StackedState) -> np.ndarray:
        i, j = _check_pair(x, self.pair)
        diff = x.agent(j) - x.agent(i)
        grad = np.zeros(x.flat.size)
        grad[x.agent_slice(i)] = 2.0 * diff
        grad_j = -2.0 * diff
        grad_j[self.axis] += 2.0 * (x.agent(j)[self.axis] + self.delta1)
        grad[x.agent_slice(j)] = grad_j
        return grad


class CustomBarrier(BarrierFunction):
    """User-supplied value and gradient callbacks over the flat state vector.

    Boundedness cannot be inferred, so `bounded_above` is whatever the caller declares.
    """

    def __init__(
        self,
        barrier_id: str,
        value_fn: Callable[[np.ndarray], float],
        gradient_fn: Callable[[np.ndarray], np.ndarray],
        bounded_above: Optional[float] = None,
    ):
        super().__init__(barrier_id, bounded_above)
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn

    def value(self, x: StackedState) -> float:
        return float(self._value_fn(x.flat))

    def gradient(self, x: StackedState) -> np.ndarray:
        grad = np.asarray(self._gradient_fn(x.flat), dtype=float).reshape(-1)
        if grad.size != x.flat.size:
            raise DimensionError(f"barrier '{self.id}' gradient has {grad.size} entries, state has {x.flat.size}")
        return grad


def finite_difference_gradient(barrier: BarrierFunction, x: StackedState, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient, used to validate analytic gradients."""
    flat = x.flat
    grad = np.zeros(flat.size)
    for k in range(flat.size):
        bump = np.zeros(flat.size)
        bump[k] = step
        upper = barrier.value(StackedState.from_flat(flat + bump, x.n_agents))
        lower = barrier.value(StackedState.from_flat(flat - bump, x.n_agents))
        grad[k] = (upper - lower) / (2.0 * step)
    return grad


def gradient_relative_error(barrier: BarrierFunction, x: StackedState, step: float = 1e-6) -> float:
    analytic = barrier.gradient(x)
    numeric = finite_difference_gradient(barrier, x, step)
    return float(np.linalg.norm(analytic - numeric) / max(1.0, np.linalg.norm(analytic)))
