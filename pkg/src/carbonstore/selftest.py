"""Property suites behind ``carbonstore selftest``, plus the random instance makers they use.

Small instances use integer or dyadic numbers so that every cost is exact in
floating point and cost ties are real ties; that is what lets the DP and the
exhaustive search be compared for exact equality, schedules included.
"""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .data import load_demand, load_fleet
from .dispatch import Fleet, build_cost_curve, build_merit_order, fleet_curve, fuel_cost
from .errors import InfeasibleError
from .oracle import brute_force_fuel_cost, exhaustive_search
from .storage import DemandProfile, StorageSpec, error_bound, solve_dp

__all__ = [
    "random_fleet",
    "random_small_instance",
    "random_bounded_instance",
    "run_all",
    "load_fixture_fleet",
    "load_fixture_demand",
]


def _fixture(name):
    return resources.files("carbonstore") / "fixtures" / name


def load_fixture_fleet(name, alpha=0.0):
    with resources.as_file(_fixture(name)) as p:
        return load_fleet(p, alpha=alpha)


def load_fixture_demand(name):
    with resources.as_file(_fixture(name)) as p:
        return load_demand(p)


def random_fleet(rng, n_max=6, alpha=None) -> Fleet:
    """Float-valued fleet with ``1..n_max`` units."""
    n = int(rng.integers(1, n_max + 1))
    cap = rng.uniform(1.0, 100.0, n)
    mf = rng.uniform(0.0, 100.0, n)
    # occasional fuel-cost ties exercise the tie-break
    if n > 1 and rng.random() < 0.2:
        mf[1] = mf[0]
    mce = rng.uniform(0.0, 2.0, n)
    a = float(rng.uniform(0.0, 30.0)) if alpha is None else alpha
    return Fleet.from_arrays(cap, mf, mce, alpha=a)


def random_small_instance(rng, with_errors=True):
    """Tiny exact-arithmetic instance: ``T <= 4``, at most 6 grid states."""
    n = int(rng.integers(1, 5))
    fleet = Fleet.from_arrays(
        rng.integers(1, 5, n).astype(float),
        rng.integers(0, 51, n).astype(float),
        rng.integers(0, 9, n) * 0.25,
        alpha=float(rng.choice([0.0, 1.0, 3.0, 20.0])),
    )
    curve = fleet_curve(fleet)
    X = curve.total_capacity
    delta = float(rng.choice([1.0, 0.5]))
    m = int(rng.integers(0, 6))
    B = m * delta
    T = int(rng.integers(1, 5))
    demands = rng.integers(0, int(2 * X) + 1, T) * 0.5
    errors = None
    if with_errors and rng.random() < 0.3:
        errors = tuple(([-0.5, 0.0, 0.5], [0.25, 0.5, 0.25]) for _ in range(T))
    profile = DemandProfile(demands, errors)
    if rng.random() < 0.5:
        spec = StorageSpec.centered(B, delta)
    else:
        spec = StorageSpec(B, delta, delta * int(rng.integers(0, m + 1)), delta * int(rng.integers(0, m + 1)))
    return curve, profile, spec


def random_bounded_instance(rng, T=24, grid_steps=50, delta=1.0):
    """Instance whose every transition is feasible, so the error bound applies as stated."""
    B = grid_steps * delta
    while True:
        n = int(rng.integers(3, 11))
        cap = rng.uniform(30.0, 120.0, n)
        if cap.sum() > 2 * B + 10:
            break
    fleet = Fleet.from_arrays(cap, rng.uniform(10.0, 90.0, n), rng.uniform(0.0, 1.2, n), alpha=float(rng.uniform(0, 30)))
    curve = fleet_curve(fleet)
    X = curve.total_capacity
    demands = rng.uniform(B, X - B, T)
    return curve, DemandProfile(demands), StorageSpec.centered(B, delta)


def _check(name, passed, detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _golden_checks():
    checks = []
    golden = json.loads(_fixture("golden.json").read_text(encoding="utf-8"))

    g = golden["three_unit_curve"]
    fleet = load_fixture_fleet("three_unit_fleet.csv", alpha=g["alpha"])
    order = build_merit_order(fleet)
    curve = build_cost_curve(fleet, order)
    same = len(curve.segments) == len(g["segments"]) and all(
        np.allclose(a, b, rtol=1e-12, atol=0) for a, b in zip(curve.segments, g["segments"])
    )
    same = same and [fleet.generators[i].id for i in order.permutation] == g["merit_order"]
    checks.append(_check("golden three-unit curve", same, f"{len(curve.segments)} segments"))

    g = golden["oracle_instance"]
    fleet = load_fixture_fleet("two_segment_fleet.csv", alpha=g["alpha"])
    curve = fleet_curve(fleet)
    profile = load_fixture_demand("oracle_demand.csv")
    spec = StorageSpec(g["capacity"], g["delta"], g["s_initial"], g["s_final"])
    dp = solve_dp(curve, profile, spec)
    ex = exhaustive_search(curve, profile, spec)
    ok = (
        dp.optimal_cost == g["optimal_cost"] == ex.optimal_cost
        and dp.schedule.states.tolist() == g["states"] == ex.schedule.states.tolist()
    )
    checks.append(_check("golden oracle instance", ok, f"cost {dp.optimal_cost!r}, states {dp.schedule.states.tolist()}"))
    return checks


def _merit_check(rng, cases):
    worst = 0.0
    for _ in range(cases):
        fleet = random_fleet(rng)
        curve = fleet_curve(fleet)
        for x in rng.uniform(0, curve.total_capacity, 10):
            ref = brute_force_fuel_cost(fleet, float(x))
            worst = max(worst, abs(fuel_cost(curve, x) - ref) / max(1.0, abs(ref)))
    return _check("merit order vs brute force", worst <= 1e-9, f"{cases} fleets, max rel err {worst:.3g}")


def _oracle_check(rng, cases):
    bad = 0
    done = 0
    while done < cases:
        curve, profile, spec = random_small_instance(rng)
        try:
            ex = exhaustive_search(curve, profile, spec)
        except InfeasibleError:
            try:
                solve_dp(curve, profile, spec)
                bad += 1
            except InfeasibleError:
                pass
            continue
        dp = solve_dp(curve, profile, spec)
        if dp.optimal_cost != ex.optimal_cost or not np.array_equal(dp.schedule.states, ex.schedule.states):
            bad += 1
        done += 1
    return _check("DP vs exhaustive search", bad == 0, f"{cases} feasible instances, {bad} mismatches")


def _bound_check(rng, cases):
    bad = 0
    for _ in range(cases):
        curve, profile, spec = random_bounded_instance(rng, T=24, grid_steps=10)
        coarse = solve_dp(curve, profile, spec, keep_table=False).optimal_cost
        fine = solve_dp(curve, profile, spec.with_delta(spec.delta / 16), keep_table=False).optimal_cost
        if not (fine <= coarse and coarse - fine <= error_bound(curve, 24, spec.delta)):
            bad += 1
    return _check("discretization error bound", bad == 0, f"{cases} instances, {bad} violations")


def run_all(seed=0, cases=50) -> dict:
    rng = np.random.default_rng(seed)
    checks = _golden_checks()
    checks.append(_merit_check(rng, cases))
    checks.append(_oracle_check(rng, cases))
    checks.append(_bound_check(rng, max(1, cases // 5)))
    return {"passed": all(c["passed"] for c in checks), "checks": checks}
