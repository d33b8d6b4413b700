from ftcbf.api.qp.minnorm import (
    KktReport,
    QpProblem,
    QpSolution,
    QpStatus,
    enumerate_active_sets,
    farkas_certificate,
    rows_from_arrays,
    solve,
    verify_kkt,
)

__all__ = [
    "KktReport",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "enumerate_active_sets",
    "farkas_certificate",
    "rows_from_arrays",
    "solve",
    "verify_kkt",
]
