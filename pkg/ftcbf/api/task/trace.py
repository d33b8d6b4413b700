"""Traces: the sequence of proposition valuations a trajectory passes through.

A trace stores a new entry only when the valuation changes. Checking a lasso
specification is waypoint matching: the expected prefix then at least
`min_cycles` repetitions of the suffix must appear, in order, as a
subsequence of the trace entries.
"""
import re
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from ftcbf.api.barriers.geometry import StackedState
from ftcbf.api.barriers.propositions import Workspace
from ftcbf.api.task.problems import PropositionSet, Waypoint
from ftcbf.core.errors import ParameterError

DEFAULT_MIN_CYCLES = 2


@dataclass(frozen=True)
class TraceEntry:
    valuation: PropositionSet
    enter_time: float


@dataclass
class TraceRecord:
    entries: List[TraceEntry] = field(default_factory=list)
    sample_count: int = 0
    last_time: Optional[float] = None

    def record_valuation(self, valuation: PropositionSet, t: float) -> "TraceRecord":
        if self.last_time is not None and not t > self.last_time:
            raise ParameterError(f"trace sample at t={t} does not follow t={self.last_time}")
        valuation = frozenset(valuation)
        if not self.entries or self.entries[-1].valuation != valuation:
            self.entries.append(TraceEntry(valuation, float(t)))
        self.sample_count += 1
        self.last_time = float(t)
        return self

    @property
    def valuations(self) -> List[PropositionSet]:
        return [e.valuation for e in self.entries]


def record_sample(trace: TraceRecord, x: StackedState, t: float, workspace: Workspace) -> TraceRecord:
    return trace.record_valuation(workspace.valuation(x), t)


def compress(samples: Iterable[Tuple[PropositionSet, float]]) -> List[TraceEntry]:
    """Drop consecutive repeats, keeping the time each valuation was entered."""
    entries: List[TraceEntry] = []
    for valuation, t in samples:
        valuation = frozenset(valuation)
        if not entries or entries[-1].valuation != valuation:
            entries.append(TraceEntry(valuation, float(t)))
    return entries


@dataclass(frozen=True)
class LassoVerdict:
    status: str  # accept | reject | timeout
    cycles_matched: int
    expected_length: int
    mismatch_index: Optional[int] = None
    mismatch_phase: Optional[str] = None
    mismatch_cycle: Optional[int] = None
    # A finite run can only show finitely many suffix repetitions.
    omega_approximate: bool = True
    message: str = ""
    # Trailing suffix waypoints were credited to the final, still-held entry.
    stabilized: bool = False

    @property
    def accepted(self) -> bool:
        return self.status == "accept"

    def as_timeout(self) -> "LassoVerdict":
        return LassoVerdict(
            "timeout",
            self.cycles_matched,
            self.expected_length,
            self.mismatch_index,
            self.mismatch_phase,
            self.mismatch_cycle,
            self.omega_approximate,
            "maximum simulation time reached before the target number of suffix cycles",
            self.stabilized,
        )


def _expected(prefix: Sequence, suffix: Sequence, min_cycles: int) -> List[Waypoint]:
    if min_cycles < 1:
        raise ParameterError(f"min_cycles must be >= 1, got {min_cycles}")
    if not suffix:
        raise ParameterError("lasso suffix must not be empty")
    return [Waypoint.coerce(w) for w in prefix] + [Waypoint.coerce(w) for w in suffix] * min_cycles


def check_lasso(
    trace: TraceRecord,
    prefix: Sequence,
    suffix: Sequence,
    min_cycles: int = DEFAULT_MIN_CYCLES,
    stabilized: bool = False,
) -> LassoVerdict:
    """Greedy subsequence match of the expected waypoints against the trace entries.

    Args:
        trace: Compressed valuation trace of a run.
        prefix: Waypoints visited once, in order.
        suffix: Waypoints repeated `min_cycles` times after the prefix.
        min_cycles: Number of suffix repetitions the trace must show.
        stabilized: The run ended while still holding its final valuation.
            Compression stores a held valuation once, so a suffix whose
            goals all hold there (a one-problem suffix reached and kept)
            would otherwise never show a second cycle. With this flag the
            final entry may cover every remaining suffix waypoint it matches.

    Returns:
        LassoVerdict with status "accept" or "reject".
    """
    expected = _expected(prefix, suffix, min_cycles)
    cursor = 0
    for entry in trace.entries:
        if cursor < len(expected) and expected[cursor].matches(entry.valuation):
            cursor += 1
    n_prefix, n_suffix = len(prefix), len(suffix)
    if (
        stabilized
        and trace.entries
        and n_prefix <= cursor < len(expected)
        and all(w.matches(trace.entries[-1].valuation) for w in expected[cursor:])
    ):
        cycles = min_cycles
        return LassoVerdict(
            "accept",
            cycles,
            len(expected),
            message=f"matched prefix and {cycles} suffix cycles, the last held in the final valuation",
            stabilized=True,
        )
    cycles = max(0, cursor - n_prefix) // n_suffix
    if cursor == len(expected):
        return LassoVerdict("accept", cycles, len(expected), message=f"matched prefix and {cycles} suffix cycles")
    if cursor < n_prefix:
        phase, cycle = "prefix", None
    else:
        phase, cycle = "suffix", (cursor - n_prefix) // n_suffix + 1
    where = f"prefix waypoint {cursor}" if phase == "prefix" else f"suffix cycle {cycle}"
    return LassoVerdict(
        "reject",
        cycles,
        len(expected),
        mismatch_index=cursor,
        mismatch_phase=phase,
        mismatch_cycle=cycle,
        message=f"no trace entry matches {where}",
    )


def brute_force_lasso_match(
    valuations: Sequence[PropositionSet],
    prefix: Sequence,
    suffix: Sequence,
    min_cycles: int = DEFAULT_MIN_CYCLES,
) -> bool:
    """Independent matcher: encode entries as characters and match a regular expression."""
    expected = _expected(prefix, suffix, min_cycles)
    symbols = [chr(0x4E00 + i) for i in range(len(valuations))]
    text = "".join(symbols)
    parts = []
    for waypoint in expected:
        allowed = "".join(re.escape(s) for s, v in zip(symbols, valuations) if waypoint.matches(v))
        if not allowed:
            return False
        parts.append(f"[{allowed}]")
    return re.fullmatch(".*" + ".*".join(parts) + ".*", text, flags=re.DOTALL) is not None
