"""Storage scheduling by dynamic programming over a discretized state of charge.

At each step the operator buys ``x_t = s_t + D_t - s_{t-1}`` from the fleet
and pays the social cost ``C(x_t)``. States live on the grid
``{0, delta, 2*delta, ..., B}``; the forward recursion

    mu_t(s) = min_{s'} E[C(s - s' + D_t)] + mu_{t-1}(s')

is tabulated stage by stage, one vectorized ``(targets x predecessors)``
block per step, so a solve costs ``O(T * (B/delta)**2)`` transitions and
``O(T * B/delta)`` memory. Infeasible transitions score ``+inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dispatch import CostCurve, cost_components, range_tolerance
from .errors import InfeasibleError, ValidationError

__all__ = [
    "DemandProfile",
    "StorageSpec",
    "Schedule",
    "DPResult",
    "feasible_predecessors",
    "stage_cost",
    "expected_stage_cost",
    "solve_dp",
    "error_bound",
    "evaluate_schedule",
]


def _as_distribution(dist):
    offsets, probs = dist
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    probs = np.atleast_1d(np.asarray(probs, dtype=float))
    if offsets.shape != probs.shape or offsets.ndim != 1 or len(offsets) == 0:
        raise ValidationError("error distribution needs matching non-empty offset and probability lists")
    if np.any(probs < 0):
        raise ValidationError("error distribution has a negative probability")
    if abs(math.fsum(probs) - 1.0) > 1e-9:
        raise ValidationError(f"error distribution probabilities sum to {math.fsum(probs)}, not 1")
    return offsets, probs


@dataclass(frozen=True, eq=False)
class DemandProfile:
    """Per-step demand ``D_t`` and, optionally, a discrete forecast error per step.

    ``errors`` is either ``None`` (perfect foresight) or one
    ``(offsets, probabilities)`` pair per step.
    """

    demands: np.ndarray
    errors: tuple | None = None

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.demands, dtype=float))
        if d.ndim != 1 or len(d) == 0:
            raise ValidationError("demand profile needs at least one step")
        if not np.all(d >= 0):
            t = int(np.flatnonzero(~(d >= 0))[0]) + 1
            raise ValidationError(f"negative or missing demand at step {t}")
        d.flags.writeable = False
        object.__setattr__(self, "demands", d)
        if self.errors is not None:
            if len(self.errors) != len(d):
                raise ValidationError("need one error distribution per demand step")
            object.__setattr__(self, "errors", tuple(_as_distribution(e) for e in self.errors))

    @classmethod
    def with_error(cls, demands, offsets, probs) -> "DemandProfile":
        """Apply the same forecast-error distribution to every step."""
        d = np.atleast_1d(np.asarray(demands, dtype=float))
        return cls(d, tuple((offsets, probs) for _ in range(len(d))))

    @property
    def horizon(self) -> int:
        return len(self.demands)

    def __len__(self):
        return len(self.demands)

    def error_at(self, t: int):
        return None if self.errors is None else self.errors[t]

    def window(self, start: int, stop: int) -> "DemandProfile":
        errs = None if self.errors is None else self.errors[start:stop]
        return DemandProfile(self.demands[start:stop].copy(), errs)

    @property
    def peak(self) -> float:
        return float(np.max(self.demands))


def _make_grid(capacity: float, delta: float) -> np.ndarray:
    tol = 1e-9 * max(1.0, capacity)
    m = int(math.floor(capacity / delta + 1e-9))
    pts = np.arange(m + 1, dtype=float) * delta
    if capacity - pts[-1] > tol:
        pts = np.append(pts, capacity)
    else:
        pts[-1] = capacity
    return pts


@dataclass(frozen=True)
class StorageSpec:
    capacity: float
    delta: float
    s_initial: float
    s_final: float

    def __post_init__(self):
        if not self.capacity >= 0:
            raise ValidationError(f"storage capacity must be >= 0, got {self.capacity}")
        if not self.delta > 0:
            raise ValidationError(f"grid step must be > 0, got {self.delta}")
        for name in ("s_initial", "s_final"):
            s = getattr(self, name)
            if not (0 <= s <= self.capacity):
                raise ValidationError(f"{name}={s} outside [0, {self.capacity}]")
            self.index_of(s)

    @classmethod
    def centered(cls, capacity: float, delta: float) -> "StorageSpec":
        """Both boundaries at the grid point nearest ``B/2`` (ties go to the lower point)."""
        grid = _make_grid(float(capacity), float(delta))
        mid = grid[int(np.argmin(np.abs(grid - capacity / 2.0)))]
        return cls(float(capacity), float(delta), float(mid), float(mid))

    def grid(self) -> np.ndarray:
        return _make_grid(float(self.capacity), float(self.delta))

    def index_of(self, s: float) -> int:
        grid = self.grid()
        i = int(np.argmin(np.abs(grid - s)))
        if abs(grid[i] - s) > 1e-9 * max(1.0, self.capacity):
            raise ValidationError(f"state {s} is not on the grid of step {self.delta}")
        return i

    def with_delta(self, delta: float) -> "StorageSpec":
        return StorageSpec(self.capacity, delta, self.s_initial, self.s_final)


@dataclass(frozen=True, eq=False)
class Schedule:
    """A state path with its purchases and per-step cost breakdown."""

    states: np.ndarray
    purchases: np.ndarray
    fuel: np.ndarray
    carbon: np.ndarray
    social: np.ndarray

    @property
    def total_fuel(self) -> float:
        return _seqsum(self.fuel)

    @property
    def total_carbon(self) -> float:
        return _seqsum(self.carbon)

    @property
    def total_social(self) -> float:
        return _seqsum(self.social)


def _seqsum(values) -> float:
    # left-to-right accumulation, the same order the DP uses
    total = 0.0
    for v in values:
        total += float(v)
    return total


@dataclass(frozen=True, eq=False)
class DPResult:
    schedule: Schedule
    optimal_cost: float
    transitions_evaluated: int
    grid: np.ndarray = field(repr=False)
    value_table: np.ndarray | None = field(default=None, repr=False)


def _social_unchecked(curve: CostCurve, x: np.ndarray) -> np.ndarray:
    k = np.minimum(np.searchsorted(curve.x_hi, x, side="right"), len(curve.x_hi) - 1)
    dx = x - curve.x_lo[k]
    return (curve.cum_fuel[k] + curve.mf[k] * dx) + (curve.cum_carbon[k] + curve.mc[k] * dx)


def _stage_cost_array(curve: CostCurve, base: np.ndarray, dist) -> np.ndarray:
    """Expected social cost of buying ``base`` (+ forecast error); ``inf`` if any scenario is infeasible."""
    X = curve.total_capacity
    tol = range_tolerance(X)
    if dist is None:
        feasible = (base >= -tol) & (base <= X + tol)
        cost = _social_unchecked(curve, np.clip(base, 0.0, X))
        return np.where(feasible, cost, np.inf)
    offsets, probs = dist
    feasible = np.ones(base.shape, dtype=bool)
    cost = np.zeros(base.shape)
    for eps, p in zip(offsets, probs):
        if p <= 0:
            continue
        x = base + eps
        feasible &= (x >= -tol) & (x <= X + tol)
        cost = cost + p * _social_unchecked(curve, np.clip(x, 0.0, X))
    return np.where(feasible, cost, np.inf)


def feasible_predecessors(s: float, demand: float, curve: CostCurve, spec: StorageSpec) -> np.ndarray:
    """Grid states ``s'`` from which ``s`` is reachable with ``0 <= s - s' + demand <= X``."""
    grid = spec.grid()
    x = (s - grid) + demand
    X = curve.total_capacity
    tol = range_tolerance(X)
    return grid[(x >= -tol) & (x <= X + tol)]


def stage_cost(curve: CostCurve, s: float, s_prev: float, demand: float) -> float:
    """Social cost of one step; ``math.inf`` marks an infeasible transition."""
    return float(_stage_cost_array(curve, np.asarray((s - s_prev) + demand, dtype=float), None))


def expected_stage_cost(curve: CostCurve, s: float, s_prev: float, demand: float, error_dist) -> float:
    """Exact expectation of the stage cost over a discrete forecast-error distribution.

    Evaluating ``C`` at the mean purchase is wrong whenever the scenarios straddle
    a breakpoint of a non-convex curve.
    """
    dist = None if error_dist is None else _as_distribution(error_dist)
    return float(_stage_cost_array(curve, np.asarray((s - s_prev) + demand, dtype=float), dist))


def error_bound(curve: CostCurve, horizon: int, delta: float) -> float:
    """Worst-case excess cost of the ``delta`` grid over the continuous optimum."""
    if horizon < 0:
        raise ValidationError("horizon must be >= 0")
    if not delta > 0:
        raise ValidationError("delta must be > 0")
    return curve.max_marginal_social * horizon * delta


def solve_dp(curve: CostCurve, profile: DemandProfile, spec: StorageSpec, keep_table: bool = True) -> DPResult:
    """Minimum expected social cost path from ``spec.s_initial`` to ``spec.s_final``.

    Among equal-cost predecessors the smallest state wins, so the returned path
    is the optimum whose reversed interior ``(s_{T-1}, ..., s_1)`` is
    lexicographically smallest.
    """
    grid = spec.grid()
    n_states = len(grid)
    T = profile.horizon
    D = profile.demands
    i0 = spec.index_of(spec.s_initial)
    i_end = spec.index_of(spec.s_final)
    all_idx = np.arange(n_states)

    mu = np.full((T, n_states), np.inf)
    choice = np.zeros((T, n_states), dtype=np.intp)
    transitions = 0

    targets = all_idx if T > 1 else np.array([i_end])
    mu[0, targets] = _stage_cost_array(curve, (grid[targets] - grid[i0]) + D[0], profile.error_at(0))
    choice[0, :] = i0
    transitions += len(targets)
    if not np.any(np.isfinite(mu[0])):
        raise InfeasibleError("no feasible state of charge after step 1", stage=1)

    for t in range(1, T):
        targets = all_idx if t < T - 1 else np.array([i_end])
        purchase = (grid[targets][:, None] - grid[None, :]) + D[t]
        total = _stage_cost_array(curve, purchase, profile.error_at(t)) + mu[t - 1][None, :]
        best = np.argmin(total, axis=1)
        mu[t, targets] = total[np.arange(len(targets)), best]
        choice[t, targets] = best
        transitions += purchase.size
        if not np.any(np.isfinite(mu[t])):
            raise InfeasibleError(f"no feasible state of charge after step {t + 1}", stage=t + 1)

    optimal = float(mu[T - 1, i_end])
    if not math.isfinite(optimal):
        raise InfeasibleError(f"final state {spec.s_final} unreachable at step {T}", stage=T)

    path = np.empty(T + 1, dtype=np.intp)
    path[T] = i_end
    for t in range(T - 1, -1, -1):
        path[t] = choice[t, path[t + 1]]
    schedule = evaluate_schedule(curve, profile, grid[path])
    return DPResult(
        schedule=schedule,
        optimal_cost=optimal,
        transitions_evaluated=int(transitions),
        grid=grid,
        value_table=mu if keep_table else None,
    )


def evaluate_schedule(
    curve: CostCurve,
    profile: DemandProfile,
    states: Sequence[float],
    spec: StorageSpec | None = None,
) -> Schedule:
    """Purchases and (fuel, carbon, social) cost per step for a given state path.

    With a forecast-error distribution the per-step costs are expectations.
    Passing ``spec`` additionally checks the states against ``[0, B]``.
    """
    s = np.asarray(states, dtype=float)
    T = profile.horizon
    if s.shape != (T + 1,):
        raise ValidationError(f"expected {T + 1} states for a {T}-step profile, got {s.shape[0] if s.ndim else 0}")
    if spec is not None:
        btol = 1e-9 * max(1.0, spec.capacity)
        for t, v in enumerate(s):
            if not (-btol <= v <= spec.capacity + btol):
                raise ValidationError(f"state at step {t} is {v}, outside [0, {spec.capacity}]")
    purchases = (s[1:] - s[:-1]) + profile.demands
    X = curve.total_capacity
    tol = range_tolerance(X)
    fuel = np.zeros(T)
    carbon = np.zeros(T)
    social = np.zeros(T)
    for t in range(T):
        dist = profile.error_at(t)
        scen = [(0.0, 1.0)] if dist is None else [(e, p) for e, p in zip(*dist) if p > 0]
        f_acc = c_acc = s_acc = 0.0
        for eps, p in scen:
            x = purchases[t] + eps
            if not (-tol <= x <= X + tol):
                raise ValidationError(f"step {t + 1}: purchase {x} outside [0, {X}]")
            f, c, total = cost_components(curve, min(max(x, 0.0), X))
            if dist is None:
                f_acc, c_acc, s_acc = f, c, total
            else:
                f_acc += p * f
                c_acc += p * c
                s_acc += p * total
        fuel[t], carbon[t], social[t] = f_acc, c_acc, s_acc
    return Schedule(s, purchases, fuel, carbon, social)
