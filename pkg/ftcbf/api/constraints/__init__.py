from ftcbf.api.constraints.dynamics import ControlAffineDynamics, lie_derivatives
from ftcbf.api.constraints.rows import (
    COMPOSITE,
    INDIVIDUAL_GOAL,
    INVARIANCE,
    CompositeGoalSpec,
    ConstraintRow,
    FtcbfParams,
    RowTag,
    assemble_problem_rows,
    composite_row,
    composite_time_estimate,
    individual_only_rows,
    individual_row,
    reach_time_bound,
    sign_pow,
)

__all__ = [
    "COMPOSITE",
    "INDIVIDUAL_GOAL",
    "INVARIANCE",
    "CompositeGoalSpec",
    "ConstraintRow",
    "ControlAffineDynamics",
    "FtcbfParams",
    "RowTag",
    "assemble_problem_rows",
    "composite_row",
    "composite_time_estimate",
    "individual_only_rows",
    "individual_row",
    "lie_derivatives",
    "reach_time_bound",
    "sign_pow",
]
