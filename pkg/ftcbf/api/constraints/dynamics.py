from typing import Callable, Tuple

import numpy as np

from ftcbf.api.barriers.functions import BarrierFunction
from ftcbf.api.barriers.geometry import StackedState
from ftcbf.core.errors import BarrierEvaluationError, DimensionError


class ControlAffineDynamics:
    """x' = f(x) + g(x) u over the flat stacked state."""

    def __init__(
        self,
        drift: Callable[[np.ndarray], np.ndarray],
        actuation: Callable[[np.ndarray], np.ndarray],
        state_dim: int,
        control_dim: int,
    ):
        self._drift = drift
        self._actuation = actuation
        self.state_dim = state_dim
        self.control_dim = control_dim

    @classmethod
    def single_integrator(cls, n_agents: int, dim: int) -> "ControlAffineDynamics":
        size = n_agents * dim
        zero = np.zeros(size)
        eye = np.eye(size)
        zero.setflags(write=False)
        eye.setflags(write=False)
        return cls(lambda x: zero, lambda x: eye, size, size)

    def drift(self, x: StackedState) -> np.ndarray:
        f = np.asarray(self._drift(x.flat), dtype=float).reshape(-1)
        if f.size != self.state_dim:
            raise DimensionError(f"drift returned {f.size} entries, expected {self.state_dim}")
        return f

    def actuation(self, x: StackedState) -> np.ndarray:
        g = np.asarray(self._actuation(x.flat), dtype=float)
        if g.shape != (self.state_dim, self.control_dim):
            raise DimensionError(f"actuation returned shape {g.shape}, expected {(self.state_dim, self.control_dim)}")
        return g

    def vector_field(self, x: StackedState, u: np.ndarray) -> np.ndarray:
        return self.drift(x) + self.actuation(x) @ np.asarray(u, dtype=float)

    def check_state(self, x: StackedState) -> None:
        if x.flat.size != self.state_dim:
            raise DimensionError(f"state has {x.flat.size} coordinates, dynamics expect {self.state_dim}")


def lie_derivatives(h: BarrierFunction, dyn: ControlAffineDynamics, x: StackedState) -> Tuple[float, np.ndarray]:
    """(L_f h(x), L_g h(x)) for a barrier along the dynamics."""
    dyn.check_state(x)
    grad = h.gradient(x)
    if grad.size != dyn.state_dim or not np.all(np.isfinite(grad)):
        raise BarrierEvaluationError(f"barrier '{h.id}' has an invalid gradient at the current state")
    return float(grad @ dyn.drift(x)), grad @ dyn.actuation(x)
