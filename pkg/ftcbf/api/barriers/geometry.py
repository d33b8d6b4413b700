from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ftcbf.core.errors import DimensionError, ParameterError

SYMMETRY_TOLERANCE = 1e-12


def _frozen(values, ndim: int, what: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise DimensionError(f"{what} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ParameterError(f"{what} has non-finite entries")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class AgentState:
    """Position of one agent in the workspace."""

    position: np.ndarray

    def __post_init__(self):
        position = _frozen(self.position, 1, "agent position")
        if position.size < 1:
            raise DimensionError("agent position needs at least one coordinate")
        object.__setattr__(self, "position", position)

    @property
    def dim(self) -> int:
        return self.position.size


@dataclass(frozen=True)
class StackedState:
    """Positions of all N agents, row i being agent i. All agents share dimension n."""

    positions: np.ndarray

    def __post_init__(self):
        positions = _frozen(self.positions, 2, "stacked state")
        if positions.shape[0] < 1 or positions.shape[1] < 1:
            raise DimensionError(f"stacked state needs N >= 1 agents and n >= 1 coordinates, got {positions.shape}")
        object.__setattr__(self, "positions", positions)

    @classmethod
    def from_agents(cls, agents: Sequence[AgentState]) -> "StackedState":
        dims = {a.dim for a in agents}
        if len(dims) > 1:
            raise DimensionError(f"agents disagree on dimension: {sorted(dims)}")
        return cls(np.stack([a.position for a in agents]))

    @classmethod
    def from_flat(cls, flat: Sequence[float], n_agents: int) -> "StackedState":
        flat = np.asarray(flat, dtype=float)
        if n_agents < 1 or flat.size % n_agents:
            raise DimensionError(f"cannot split {flat.size} coordinates over {n_agents} agents")
        return cls(flat.reshape(n_agents, -1))

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.positions.reshape(-1)

    def agent(self, index: int) -> np.ndarray:
        if not 0 <= index < self.n_agents:
            raise DimensionError(f"agent index {index} out of range for {self.n_agents} agents")
        return self.positions[index]

    def agents(self) -> list:
        return [AgentState(p) for p in self.positions]

    def agent_slice(self, index: int) -> slice:
        """Slice of the flat state vector holding agent `index`."""
        return slice(index * self.dim, (index + 1) * self.dim)


@dataclass(frozen=True)
class QuadraticRegion:
    """Ellipsoidal region {p : 1 - (p - center)^T shape (p - center) >= 0}.

    `shape` must be symmetric positive definite; this is checked on construction.
    """

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        center = _frozen(self.center, 1, "region center")
        shape = _frozen(self.shape, 2, "region shape")
        if shape.shape != (center.size, center.size):
            raise DimensionError(f"region shape {shape.shape} does not match center of length {center.size}")
        if np.max(np.abs(shape - shape.T)) > SYMMETRY_TOLERANCE:
            raise ParameterError("region shape matrix is not symmetric")
        eigenvalues = np.linalg.eigvalsh(shape)
        if eigenvalues.min() <= 0:
            raise ParameterError(
                "region shape matrix is not positive definite",
                {"min_eigenvalue": float(eigenvalues.min())},
            )
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return self.center.size

    def offset(self, position: np.ndarray) -> np.ndarray:
        position = np.asarray(position, dtype=float)
        if position.shape != self.center.shape:
            raise DimensionError(f"position of shape {position.shape} does not match region dimension {self.dim}")
        return position - self.center


PositionLike = Union[AgentState, np.ndarray, Sequence[float]]


def as_position(x: PositionLike) -> np.ndarray:
    if isinstance(x, AgentState):
        return x.position
    return np.asarray(x, dtype=float)


def eval_quadratic(region: QuadraticRegion, x: PositionLike) -> float:
    """h_r(x) = 1 - (x - C)^T P (x - C). Never exceeds 1."""
    d = region.offset(as_position(x))
    return float(1.0 - d @ region.shape @ d)


def grad_quadratic(region: QuadraticRegion, x: PositionLike) -> np.ndarray:
    d = region.offset(as_position(x))
    return -2.0 * region.shape @ d
