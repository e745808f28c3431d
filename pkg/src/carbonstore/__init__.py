"""Storage scheduling against non-convex merit-order social cost curves."""
from .dispatch import (
    CostCurve,
    Fleet,
    Generator,
    MeritOrder,
    build_cost_curve,
    build_merit_order,
    carbon_cost,
    cost_components,
    dispatch,
    fleet_curve,
    fuel_cost,
    marginal_fuel_cost,
    marginal_social_cost,
    social_cost,
)
from .errors import (
    BudgetError,
    CarbonStoreError,
    InfeasibleError,
    OutOfRangeError,
    ParseError,
    ValidationError,
)
from .storage import (
    DemandProfile,
    DPResult,
    Schedule,
    StorageSpec,
    error_bound,
    evaluate_schedule,
    expected_stage_cost,
    feasible_predecessors,
    solve_dp,
    stage_cost,
)

__version__ = "0.1.0"
