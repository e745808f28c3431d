"""Brute-force reference solvers for small instances.

Nothing here calls into the merit-order sort, the curve evaluators or the DP
tables; the only shared thing is the arithmetic convention (purchase computed
as ``(s - s_prev) + D``, fuel and carbon integrated segment by segment and
added last) so that costs can be compared for exact equality.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .dispatch import CostCurve, Fleet
from .errors import BudgetError, InfeasibleError, OutOfRangeError
from .storage import DemandProfile, DPResult, Schedule, StorageSpec

__all__ = ["brute_force_fuel_cost", "exhaustive_search", "PATH_BUDGET", "MAX_FLEET"]

PATH_BUDGET = 10**6
MAX_FLEET = 8


def brute_force_fuel_cost(fleet: Fleet, x):
    """Cheapest greedy fill over every ordering of the generators.

    Each vertex of the dispatch polytope is such a fill, so the minimum is the
    optimum of the linear dispatch program. ``x`` may be a scalar or an array.
    """
    gens = fleet.generators
    if len(gens) > MAX_FLEET:
        raise BudgetError(f"brute force limited to {MAX_FLEET} generators, got {len(gens)}")
    caps = np.array([g.capacity for g in gens], dtype=float)
    fuel = np.array([g.marginal_fuel_cost for g in gens], dtype=float)
    total = caps.sum()
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0) or np.any(xs > total * (1 + 1e-12)):
        raise OutOfRangeError(f"demand outside [0, {total}]")
    best = np.full(xs.shape, math.inf)
    for order in itertools.permutations(range(len(gens))):
        order = list(order)
        c = caps[order]
        already = np.concatenate(([0.0], np.cumsum(c)[:-1]))
        taken = np.clip(xs[:, None] - already[None, :], 0.0, c[None, :])
        best = np.minimum(best, taken @ fuel[order])
    return float(best[0]) if np.ndim(x) == 0 else best


def _curve_cost(curve: CostCurve, x: float) -> tuple[float, float]:
    # walk the segments, integrating fuel and carbon separately
    fuel = carbon = 0.0
    for lo, hi, f, c in zip(curve.x_lo.tolist(), curve.x_hi.tolist(), curve.mf.tolist(), curve.mc.tolist()):
        if x >= hi and hi != curve.x_hi[-1]:
            fuel += f * (hi - lo)
            carbon += c * (hi - lo)
        else:
            fuel += f * (x - lo)
            carbon += c * (x - lo)
            break
    return fuel, carbon


def _grid(spec: StorageSpec) -> list[float]:
    B, d = float(spec.capacity), float(spec.delta)
    pts = []
    k = 0
    while k * d <= B + 1e-9 * max(1.0, B):
        pts.append(k * d)
        k += 1
    if B - pts[-1] > 1e-9 * max(1.0, B):
        pts.append(B)
    else:
        pts[-1] = B
    return pts


def _snap(value: float, grid: list[float], B: float) -> float:
    best = min(grid, key=lambda g: abs(g - value))
    if abs(best - value) > 1e-9 * max(1.0, B):
        raise ValueError(f"{value} not on grid")
    return best


def exhaustive_search(curve: CostCurve, profile: DemandProfile, spec: StorageSpec) -> DPResult:
    """Enumerate every interior state path and keep the cheapest feasible one.

    Cost ties go to the path whose reversed interior is lexicographically
    smallest, matching the DP's smallest-predecessor rule.
    """
    grid = _grid(spec)
    T = profile.horizon
    n_paths = len(grid) ** (T - 1)
    if n_paths > PATH_BUDGET:
        raise BudgetError(f"{n_paths} paths exceed the budget of {PATH_BUDGET}")
    X = float(curve.x_hi[-1])
    tol = 1e-9 * max(1.0, X)
    s0 = _snap(spec.s_initial, grid, spec.capacity)
    sT = _snap(spec.s_final, grid, spec.capacity)
    demands = [float(d) for d in profile.demands]
    dists = [
        [(0.0, 1.0)] if profile.error_at(t) is None
        else [(float(e), float(p)) for e, p in zip(*profile.error_at(t)) if p > 0]
        for t in range(T)
    ]

    cache: dict[float, float] = {}

    def cost_at(x):
        if x not in cache:
            f, c = _curve_cost(curve, min(max(x, 0.0), X))
            cache[x] = f + c
        return cache[x]

    best_cost = math.inf
    best_key = None
    best_path = None
    for interior in itertools.product(grid, repeat=T - 1):
        path = (s0,) + interior + (sT,)
        total = 0.0
        ok = True
        for t in range(T):
            base = (path[t + 1] - path[t]) + demands[t]
            step = 0.0
            for eps, p in dists[t]:
                x = base + eps
                if x < -tol or x > X + tol:
                    ok = False
                    break
                step += p * cost_at(x)
            if not ok:
                break
            total += step
        if not ok:
            continue
        key = tuple(reversed(interior))
        if total < best_cost or (total == best_cost and key < best_key):
            best_cost, best_key, best_path = total, key, path
    if best_path is None:
        raise InfeasibleError("no feasible path between the boundary states")

    states = np.array(best_path, dtype=float)
    purchases = (states[1:] - states[:-1]) + profile.demands
    fuel, carbon, social = [], [], []
    for t in range(T):
        fs = cs = ss = 0.0
        for eps, p in dists[t]:
            f, c = _curve_cost(curve, min(max(purchases[t] + eps, 0.0), X))
            fs += p * f
            cs += p * c
            ss += p * (f + c)
        fuel.append(fs)
        carbon.append(cs)
        social.append(ss)
    sched = Schedule(states, purchases, np.array(fuel), np.array(carbon), np.array(social))
    return DPResult(sched, best_cost, transitions_evaluated=n_paths * T, grid=np.array(grid))
