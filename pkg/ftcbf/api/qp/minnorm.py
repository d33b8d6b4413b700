"""Minimum-norm control: min ||u||^2 subject to a_i . u >= b_i.

The dual of this QP is max_{lambda >= 0} b.lambda - 1/2 ||A^T lambda||^2 with
u = A^T lambda. It is solved by projected coordinate ascent (Hildreth's
method), then polished by solving the KKT system on the detected active set.
Infeasibility is certified with a Farkas vector from a small LP.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from ftcbf.api.constraints.rows import BOUND, ConstraintRow, RowTag
from ftcbf.core.config import QpSettings
from ftcbf.core.errors import DimensionError

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS = QpSettings()


class QpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class QpProblem:
    rows: Tuple[ConstraintRow, ...]
    dim: int
    # Optional (lower, upper) per coordinate; None entries leave a side open.
    bounds: Optional[Tuple[Tuple[Optional[float], Optional[float]], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if row.normal.size != self.dim:
                raise DimensionError(f"row {row.tag} has {row.normal.size} coefficients, control has {self.dim}")
        if self.bounds is not None and len(self.bounds) != self.dim:
            raise DimensionError(f"{len(self.bounds)} box bounds given for a {self.dim}-dimensional control")

    def all_rows(self) -> List[ConstraintRow]:
        """Constraint rows followed by two rows per bounded coordinate."""
        rows = list(self.rows)
        for k, (lower, upper) in enumerate(self.bounds or ()):
            unit = np.zeros(self.dim)
            unit[k] = 1.0
            if lower is not None:
                rows.append(ConstraintRow(unit, lower, RowTag(BOUND, f"u{k}>=")))
            if upper is not None:
                rows.append(ConstraintRow(-unit, -upper, RowTag(BOUND, f"u{k}<=")))
        return rows

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, List[RowTag]]:
        rows = self.all_rows()
        if not rows:
            return np.zeros((0, self.dim)), np.zeros(0), []
        return np.vstack([r.normal for r in rows]), np.array([r.offset for r in rows]), [r.tag for r in rows]


@dataclass
class QpSolution:
    u: np.ndarray
    multipliers: np.ndarray
    status: QpStatus
    iterations: int = 0
    diagnostic: Dict[str, Any] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


@dataclass(frozen=True)
class KktReport:
    feasibility: float
    stationarity: float
    complementarity: float
    dual_feasibility: float

    def within(self, feasibility: float = 1e-8, stationarity: float = 1e-8, complementarity: float = 1e-6) -> bool:
        return (
            self.feasibility <= feasibility
            and self.stationarity <= stationarity
            and self.complementarity <= complementarity
            and self.dual_feasibility <= 0.0
        )


def solve(p: QpProblem, settings: QpSettings = DEFAULT_SETTINGS) -> QpSolution:
    """
    Minimum-norm control subject to A u >= b.

    Runs dual coordinate ascent on the multipliers, then solves the KKT system
    on the resulting active set. If that fails, an LP looks for a Farkas
    certificate and the rows it uses are reported as the conflict.

    Args:
        p: Constraint rows (box bounds become extra rows) and the control dimension.
        settings: Iteration cap, tolerances and the debug dual-ascent check.

    Returns:
        A QpSolution. `status` is optimal, infeasible or max-iterations; for
        infeasible results `diagnostic` carries "reason" and the offending "rows".

    Raises:
        DimensionError: If a row or the bounds do not match the control dimension.
    """
    A, b, tags = p.arrays()
    k = b.size
    if k == 0:
        return QpSolution(np.zeros(p.dim), np.zeros(0), QpStatus.OPTIMAL)

    norms_sq = np.einsum("ij,ij->i", A, A)
    zero_rows = norms_sq == 0.0
    blocked = np.flatnonzero(zero_rows & (b > 0))
    if blocked.size:
        culprits = [str(tags[i]) for i in blocked]
        logger.debug("QP has pointwise-infeasible rows: %s", culprits)
        return QpSolution(
            np.zeros(p.dim),
            np.zeros(k),
            QpStatus.INFEASIBLE,
            diagnostic={"reason": "zero-normal row with positive offset", "rows": culprits},
        )

    live = np.flatnonzero(~zero_rows)
    lam = np.zeros(k)
    u = np.zeros(p.dim)
    dual = 0.0
    converged = False
    diverged = False
    iterations = 0
    for iterations in range(1, settings.max_iterations + 1):
        largest_move = 0.0
        for i in live:
            step = (b[i] - A[i] @ u) / norms_sq[i]
            updated = max(0.0, lam[i] + step)
            delta = updated - lam[i]
            if delta != 0.0:
                u = u + delta * A[i]
                lam[i] = updated
                largest_move = max(largest_move, abs(delta) * np.sqrt(norms_sq[i]))
        if settings.debug:
            next_dual = float(b @ lam - 0.5 * u @ u)
            assert next_dual >= dual - 1e-9 * max(1.0, abs(dual)), "dual objective decreased"
            dual = next_dual
        if np.linalg.norm(lam) > settings.divergence_norm:
            diverged = True
            break
        if largest_move <= settings.dual_tolerance:
            converged = True
            break

    if not diverged:
        polished = _polish(A, b, lam, settings.feasibility_tolerance)
        if polished is not None:
            u, lam = polished
            return QpSolution(u, lam, QpStatus.OPTIMAL, iterations)
        if converged:
            return QpSolution(u, lam, QpStatus.OPTIMAL, iterations)

    certificate = farkas_certificate(A, b)
    if certificate is not None:
        culprits = [str(tags[i]) for i in np.flatnonzero(certificate > 1e-9)]
        logger.debug("QP certified infeasible; rows in certificate: %s", culprits)
        return QpSolution(
            u,
            lam,
            QpStatus.INFEASIBLE,
            iterations,
            {"reason": "dual unbounded (Farkas certificate)", "rows": culprits},
        )
    return QpSolution(u, lam, QpStatus.MAX_ITERATIONS, iterations, {"reason": "iteration cap reached"})


def _polish(A: np.ndarray, b: np.ndarray, lam: np.ndarray, tolerance: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Solve the KKT system on the active set suggested by lam, adjusting it a few times."""
    k, m = A.shape
    active = set(np.flatnonzero(lam > 0.0).tolist())
    for _ in range(2 * k + 1):
        indices = sorted(active)
        multipliers = np.zeros(k)
        if indices:
            A_s = A[indices]
            lam_s, *_ = np.linalg.lstsq(A_s @ A_s.T, b[indices], rcond=None)
            multipliers[indices] = lam_s
        u = A.T @ multipliers
        slack = A @ u - b
        scale = 1.0 + np.abs(b)
        negative = [i for i in indices if multipliers[i] < -tolerance]
        violated = np.flatnonzero(slack < -tolerance * scale)
        if not negative and violated.size == 0:
            if indices and np.max(np.abs(slack[indices])) > tolerance * np.max(scale[indices]):
                # Dependent active rows with an inconsistent system.
                return None
            return u, np.maximum(multipliers, 0.0)
        if negative:
            active.discard(min(negative, key=lambda i: multipliers[i]))
        else:
            active.add(int(violated[np.argmin(slack[violated] / scale[violated])]))
    return None


def farkas_certificate(A: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    """y >= 0 with A^T y = 0 and b . y = 1, if one exists (proof that A u >= b is infeasible)."""
    k, m = A.shape
    A_eq = np.vstack([A.T, b.reshape(1, -1)])
    b_eq = np.concatenate([np.zeros(m), [1.0]])
    result = linprog(np.ones(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    if result.status != 0:
        return None
    return result.x


def verify_kkt(p: QpProblem, s: QpSolution) -> KktReport:
    """Recompute KKT residuals from the problem data alone."""
    A, b, _ = p.arrays()
    u = np.asarray(s.u, dtype=float)
    lam = np.asarray(s.multipliers, dtype=float)
    if b.size == 0:
        return KktReport(0.0, float(np.linalg.norm(u)), 0.0, 0.0)
    slack = A @ u - b
    return KktReport(
        feasibility=float(max(0.0, np.max(-slack))),
        stationarity=float(np.linalg.norm(u - A.T @ lam)),
        complementarity=float(np.max(np.abs(lam * slack))),
        dual_feasibility=float(max(0.0, np.max(-lam))),
    )


def enumerate_active_sets(p: QpProblem, tolerance: float = 1e-9) -> Optional[np.ndarray]:
    """Reference solution by trying every subset of rows as the active set.

    Each subset gives the least-norm point of its equality system; the
    feasible candidate with the smallest norm is the optimum. Returns None when
    no subset yields a feasible point. Exponential in the row count.
    """
    A, b, _ = p.arrays()
    k = b.size
    best = None
    for size in range(k + 1):
        for subset in combinations(range(k), size):
            if subset:
                A_s = A[list(subset)]
                u, *_ = np.linalg.lstsq(A_s, b[list(subset)], rcond=None)
                if np.max(np.abs(A_s @ u - b[list(subset)])) > tolerance * (1.0 + np.max(np.abs(b))):
                    continue
            else:
                u = np.zeros(p.dim)
            if k and np.min(A @ u - b) < -tolerance * (1.0 + np.max(np.abs(b))):
                continue
            if best is None or u @ u < best @ best:
                best = u
    return best


def rows_from_arrays(A: Sequence[Sequence[float]], b: Sequence[float], kind: str = "row") -> Tuple[ConstraintRow, ...]:
    return tuple(ConstraintRow(np.asarray(a, dtype=float), float(bi), RowTag(kind, str(i))) for i, (a, bi) in enumerate(zip(A, b)))
