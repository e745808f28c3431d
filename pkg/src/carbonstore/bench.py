"""Experiments: discretization accuracy, runtime scaling, and daily cost reductions."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .dispatch import CostCurve, Fleet, fleet_curve
from .errors import InfeasibleError, ValidationError
from .storage import DemandProfile, StorageSpec, evaluate_schedule, solve_dp

__all__ = [
    "AccuracyPoint",
    "RuntimePoint",
    "ReductionReport",
    "accuracy_sweep",
    "runtime_sweep",
    "reduction_report",
    "arbitrage_comparison",
    "HOURS_PER_DAY",
]

HOURS_PER_DAY = 24


@dataclass(frozen=True)
class AccuracyPoint:
    delta: float
    cost_at_delta: float
    cost_at_reference: float
    gamma: float


@dataclass(frozen=True)
class RuntimePoint:
    delta: float
    wall_time: float
    transitions_evaluated: int


@dataclass(frozen=True, eq=False)
class ReductionReport:
    """Per-day cost reductions (baseline minus optimized), in day order.

    ``fuel_reduction`` can be negative: cutting carbon often means buying
    more from expensive units.
    """

    peak_demand: np.ndarray
    social_reduction: np.ndarray
    carbon_reduction: np.ndarray
    fuel_reduction: np.ndarray
    baseline_social: np.ndarray = field(repr=False)
    optimized_social: np.ndarray = field(repr=False)
    capacity: float = 0.0

    @property
    def days(self) -> int:
        return len(self.peak_demand)

    def rows(self):
        for d in range(self.days):
            yield {
                "day": d,
                "peak_demand": float(self.peak_demand[d]),
                "social_reduction": float(self.social_reduction[d]),
                "carbon_reduction": float(self.carbon_reduction[d]),
                "fuel_reduction": float(self.fuel_reduction[d]),
                "baseline_social": float(self.baseline_social[d]),
                "optimized_social": float(self.optimized_social[d]),
            }


def _is_multiple(value: float, base: float) -> bool:
    ratio = value / base
    return abs(ratio - round(ratio)) <= 1e-9 * max(1.0, abs(ratio)) and round(ratio) >= 1


def accuracy_sweep(curve, profile, spec_base, deltas, delta_reference) -> list[AccuracyPoint]:
    """Normalized excess cost ``gamma = (C(delta) - C(ref)) / (max_marginal * T)``.

    The reference step must divide every swept step so the coarse grids nest
    inside the reference grid.
    """
    if not delta_reference > 0 or any(not d > 0 for d in deltas):
        raise ValidationError("grid steps must be positive")
    for d in deltas:
        if not _is_multiple(d, delta_reference):
            raise ValidationError(f"delta {d} is not a multiple of the reference step {delta_reference}")
    reference = solve_dp(curve, profile, spec_base.with_delta(delta_reference), keep_table=False).optimal_cost
    norm = curve.max_marginal_social * profile.horizon
    points = []
    for d in deltas:
        if d == delta_reference:
            cost = reference
        else:
            cost = solve_dp(curve, profile, spec_base.with_delta(d), keep_table=False).optimal_cost
        points.append(AccuracyPoint(float(d), cost, reference, (cost - reference) / norm))
    return points


def runtime_sweep(curve, profile, spec_base, deltas, repeats: int = 3) -> list[RuntimePoint]:
    """Median wall time and the transition count per grid step. Runs are serialized."""
    if len(deltas) == 0:
        raise ValidationError("need at least one grid step")
    out = []
    for d in deltas:
        spec = spec_base.with_delta(d)
        times = []
        count = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = solve_dp(curve, profile, spec, keep_table=False)
            times.append(time.perf_counter() - t0)
            count = res.transitions_evaluated
        out.append(RuntimePoint(float(d), statistics.median(times), int(count)))
    return out


def _days(profile: DemandProfile) -> int:
    if profile.horizon % HOURS_PER_DAY:
        raise ValidationError(f"profile length {profile.horizon} is not a whole number of days")
    return profile.horizon // HOURS_PER_DAY


def _daily_reductions(eval_curve: CostCurve, opt_curve: CostCurve, profile, capacity, delta):
    n_days = _days(profile)
    spec = StorageSpec.centered(capacity, delta)
    cols = {k: np.zeros(n_days) for k in ("peak", "social", "carbon", "fuel", "base", "opt")}
    for d in range(n_days):
        day = profile.window(d * HOURS_PER_DAY, (d + 1) * HOURS_PER_DAY)
        flat = np.full(HOURS_PER_DAY + 1, spec.s_initial)
        try:
            base = evaluate_schedule(eval_curve, day, flat)
            states = solve_dp(opt_curve, day, spec, keep_table=False).schedule.states
        except (InfeasibleError, ValidationError) as exc:
            raise InfeasibleError(f"day {d}: {exc}", stage=None) from exc
        opt = evaluate_schedule(eval_curve, day, states)
        cols["peak"][d] = day.peak
        cols["base"][d] = base.total_social
        cols["opt"][d] = opt.total_social
        cols["social"][d] = base.total_social - opt.total_social
        cols["carbon"][d] = base.total_carbon - opt.total_carbon
        cols["fuel"][d] = base.total_fuel - opt.total_fuel
    return ReductionReport(
        cols["peak"], cols["social"], cols["carbon"], cols["fuel"], cols["base"], cols["opt"], float(capacity)
    )


def reduction_report(fleet: Fleet, annual_profile: DemandProfile, storage_fraction: float, delta: float) -> ReductionReport:
    """Solve each 24-step day with ``B = storage_fraction * peak`` against a no-storage baseline.

    Each day starts and ends at the grid point nearest ``B/2``; the baseline
    holds that state all day, so purchases equal demand.
    """
    if not storage_fraction >= 0:
        raise ValidationError("storage_fraction must be >= 0")
    curve = fleet_curve(fleet)
    capacity = storage_fraction * annual_profile.peak
    return _daily_reductions(curve, curve, annual_profile, capacity, delta)


def arbitrage_comparison(fleet, annual_profile, storage_fraction, delta, alpha_eval):
    """Carbon-aware vs. fuel-only (alpha = 0) schedules, both costed at ``alpha_eval``.

    Returns ``(carbon_aware, arbitrage)`` reports sharing the same baseline.
    """
    if not storage_fraction >= 0:
        raise ValidationError("storage_fraction must be >= 0")
    eval_curve = fleet_curve(fleet.with_alpha(alpha_eval))
    fuel_only = fleet_curve(fleet.with_alpha(0.0))
    capacity = storage_fraction * annual_profile.peak
    aware = _daily_reductions(eval_curve, eval_curve, annual_profile, capacity, delta)
    arbitrage = _daily_reductions(eval_curve, fuel_only, annual_profile, capacity, delta)
    return aware, arbitrage
