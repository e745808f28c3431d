"""Exit criteria. Each test prints one PASS/FAIL line (see the terminal summary)."""
import json
import time

import numpy as np
import pytest

from carbonstore import (
    DemandProfile,
    Fleet,
    InfeasibleError,
    StorageSpec,
    build_merit_order,
    error_bound,
    evaluate_schedule,
    fleet_curve,
    fuel_cost,
    marginal_fuel_cost,
    marginal_social_cost,
    social_cost,
    solve_dp,
)
from carbonstore.bench import accuracy_sweep, arbitrage_comparison, reduction_report, runtime_sweep
from carbonstore.cli import main
from carbonstore.data import synth_demand, synth_fleet, scale_demand
from carbonstore.oracle import brute_force_fuel_cost, exhaustive_search
from carbonstore.selftest import random_fleet, random_bounded_instance, random_small_instance

pytestmark = pytest.mark.acceptance


def test_ac1_merit_order_optimality(criterion):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        fleet = random_fleet(rng, n_max=6)
        curve = fleet_curve(fleet)
        xs = rng.uniform(0, curve.total_capacity, 50)
        ref = brute_force_fuel_cost(fleet, xs)
        got = fuel_cost(curve, xs)
        worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    criterion("AC1", ok, f"merit-order fill = brute force on 200 fleets x 50 x: max rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst <= 1e-9
    assert elapsed < 10


def _first_drop(curve):
    """Return (x1, x2) with C'(x1) > C'(x2), or None if the marginal never decreases."""
    probes = curve.x_lo + 0.5 * (curve.x_hi - curve.x_lo)
    m = marginal_social_cost(curve, probes)
    for i in range(len(m) - 1):
        if m[i] > m[i + 1]:
            return probes[i], probes[i + 1]
    return None


def test_ac2_nonconvexity_witness(criterion):
    # fuel costs 30/60/80; the drop exists exactly when alpha exceeds
    # min over neighbours of (MF_{k+1} - MF_k) / (MCE_k - MCE_{k+1})
    mf = np.array([30.0, 60.0, 80.0])
    mce_sets = [(1.0, 0.5, 0.2), (2.0, 0.1, 0.05), (1.2, 1.0, 0.1), (0.9, 0.6, 0.3)]
    alphas = [0.5, 1, 3, 10, 20, 40, 70, 100, 250]
    witnesses = 0
    mismatches = 0
    fuel_ok = True
    for mce in mce_sets:
        mce = np.array(mce)
        threshold = np.min(np.diff(mf) / -np.diff(mce))
        for a in alphas:
            curve = fleet_curve(Fleet.from_arrays([100, 100, 100], mf, mce, alpha=a))
            assert build_merit_order(Fleet.from_arrays([100, 100, 100], mf, mce, alpha=a)).permutation == (0, 1, 2)
            drop = _first_drop(curve)
            if drop is not None:
                x1, x2 = drop
                assert x1 < x2 and marginal_social_cost(curve, x1) > marginal_social_cost(curve, x2)
                witnesses += 1
            if (drop is not None) != (a > threshold):
                mismatches += 1
            xs = np.linspace(0, 299.9, 400)
            fuel_ok &= bool(np.all(np.diff(marginal_fuel_cost(curve, xs)) >= 0))
    ok = witnesses > 0 and mismatches == 0 and fuel_ok
    criterion(
        "AC2",
        ok,
        f"MF=(30,60,80): {witnesses} non-convex witnesses over {len(mce_sets) * len(alphas)} (alpha, MCE) cases, "
        f"drop present iff alpha > threshold in all cases, fuel marginal non-decreasing={fuel_ok}",
    )
    assert ok


def test_ac3_dp_oracle_equivalence(criterion):
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    feasible = cost_bad = sched_bad = infeasible_agree = 0
    while feasible < 100:
        curve, profile, spec = random_small_instance(rng)
        assert len(spec.grid()) <= 6 and profile.horizon <= 4
        try:
            ex = exhaustive_search(curve, profile, spec)
        except InfeasibleError:
            with pytest.raises(InfeasibleError):
                solve_dp(curve, profile, spec)
            infeasible_agree += 1
            continue
        dp = solve_dp(curve, profile, spec)
        cost_bad += dp.optimal_cost != ex.optimal_cost
        sched_bad += not np.array_equal(dp.schedule.states, ex.schedule.states)
        feasible += 1
    elapsed = time.perf_counter() - t0
    ok = cost_bad == 0 and sched_bad == 0 and elapsed < 30
    criterion(
        "AC3",
        ok,
        f"DP = exhaustive search on 100 instances: {cost_bad} cost / {sched_bad} schedule mismatches "
        f"(+{infeasible_agree} infeasible, both refused), {elapsed:.1f}s",
    )
    assert ok


def test_ac4_discretization_bound(criterion):
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    violations = sign_bad = 0
    worst = 0.0
    for _ in range(100):
        curve, profile, spec = random_bounded_instance(rng, T=24, grid_steps=50, delta=1.0)
        coarse = solve_dp(curve, profile, spec, keep_table=False).optimal_cost
        fine = solve_dp(curve, profile, spec.with_delta(spec.delta / 16), keep_table=False).optimal_cost
        bound = error_bound(curve, 24, spec.delta)
        violations += abs(coarse - fine) > bound
        sign_bad += fine > coarse
        worst = max(worst, abs(coarse - fine) / bound)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and sign_bad == 0 and elapsed < 300
    criterion(
        "AC4",
        ok,
        f"|mu(d) - mu(d/16)| <= Mc*24*d on 100 instances (B/d=50): {violations} violations, "
        f"{sign_bad} sign failures, max ratio to bound {worst:.2e}, {elapsed:.0f}s",
    )
    assert ok


def test_ac5_normalized_accuracy(criterion):
    rng = np.random.default_rng(505)
    bad = 0
    ratios = []
    for _ in range(10):
        curve, profile, spec = random_bounded_instance(rng, T=24, grid_steps=8, delta=4.0)
        deltas = [4.0, 2.0, 1.0, 0.5, 0.25]
        for p in accuracy_sweep(curve, profile, spec, deltas, 0.25):
            bad += not (p.gamma <= p.delta)
            if p.delta > 0.25:
                ratios.append(p.gamma / p.delta)
    ok = bad == 0
    criterion(
        "AC5",
        ok,
        f"gamma <= delta in 10 nested sweeps: {bad} violations; observed gamma/delta "
        f"median {np.median(ratios):.2e}, max {np.max(ratios):.2e} (reported only)",
    )
    assert ok


def test_ac6_complexity_scaling(criterion):
    curve, profile, spec = random_bounded_instance(np.random.default_rng(606), T=24, grid_steps=100, delta=1.0)
    # demands in [B, X - B]: every transition is feasible, nothing pruned
    for d in (1.0, 0.5):
        res = solve_dp(curve, profile, spec.with_delta(d))
        assert np.all(np.isfinite(res.value_table[:-1]))
    coarse, fine = runtime_sweep(curve, profile, spec, [1.0, 0.5], repeats=3)
    count_ratio = fine.transitions_evaluated / coarse.transitions_evaluated
    time_ratio = fine.wall_time / coarse.wall_time
    time_ok = 2 <= time_ratio <= 8
    count_ok = count_ratio == 4
    criterion(
        "AC6",
        count_ok and time_ok,
        f"transitions {coarse.transitions_evaluated} -> {fine.transitions_evaluated}, ratio {count_ratio:.6f} "
        f"(required exactly 4); wall-time ratio {time_ratio:.2f} (required in [2, 8])",
    )
    assert time_ok
    assert count_ratio == 4


def test_ac7_carbon_aware_dominance(criterion):
    rng = np.random.default_rng(707)
    violations = 0
    gaps = []
    for i in range(100):
        fleet = synth_fleet(int(rng.integers(2**31)), int(rng.integers(3, 30))).with_alpha(3.0)
        day = synth_demand(int(rng.integers(2**31)), 1)
        day = scale_demand(day, fleet, float(rng.uniform(0.5, 0.9)))
        capacity = 0.2 * day.peak
        aware, arb = arbitrage_comparison(fleet, day, 0.2, capacity / 50, 3.0)
        violations += aware.optimized_social[0] > arb.optimized_social[0]
        gaps.append(arb.optimized_social[0] - aware.optimized_social[0])
    ok = violations == 0
    criterion(
        "AC7",
        ok,
        f"carbon-aware <= arbitrage (alpha=3) on 100 days: {violations} violations, "
        f"{sum(g > 0 for g in gaps)} strict wins, mean gap ${np.mean(gaps):.2f}",
    )
    assert ok


def test_ac8_decomposition_and_baseline(criterion):
    rng = np.random.default_rng(808)
    problems = []
    for _ in range(5):
        fleet = synth_fleet(int(rng.integers(2**31)), 20).with_alpha(3.0)
        profile = scale_demand(synth_demand(int(rng.integers(2**31)), 7), fleet, 0.9)
        for frac in (0.2, 0.0):
            rep = reduction_report(fleet, profile, frac, 0.2 * profile.peak / 50 if frac else 1.0)
            scale = np.maximum(np.abs(rep.baseline_social), 1.0)
            if not np.all(np.abs(rep.social_reduction - rep.carbon_reduction - rep.fuel_reduction) <= 1e-9 * scale):
                problems.append("decomposition")
            if not np.all(rep.social_reduction >= 0):
                problems.append("negative social reduction")
            if frac == 0 and not all(np.all(a == 0) for a in (rep.social_reduction, rep.carbon_reduction, rep.fuel_reduction)):
                problems.append("nonzero report at zero storage")
        curve = fleet_curve(fleet)
        day = profile.window(0, 24)
        res = solve_dp(curve, day, StorageSpec(0, 1.0, 0, 0))
        total = 0.0
        for x in day.demands:
            total += social_cost(curve, x)
        if res.optimal_cost != total:
            problems.append("B=0 cost")
    ok = not problems
    criterion("AC8", ok, f"decomposition, non-negative savings, zero-storage and B=0 checks on 5 fleets x 7 days: {problems or 'all hold'}")
    assert ok


def test_ac9_capacity_monotonicity(criterion):
    rng = np.random.default_rng(909)
    bad = 0
    for _ in range(50):
        curve, profile, _ = random_bounded_instance(rng, T=24, grid_steps=20, delta=1.0)
        costs = [solve_dp(curve, profile, StorageSpec.centered(b, 1.0), keep_table=False).optimal_cost for b in range(0, 21, 2)]
        bad += any(a < b for a, b in zip(costs, costs[1:]))
    ok = bad == 0
    criterion("AC9", ok, f"optimal cost non-increasing over B in {{0, 2d, ..., 20d}} on 50 instances: {bad} violations")
    assert ok


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def test_ac10_determinism(criterion, tmp_path):
    common = ["--synth-fleet", "21,15", "--synth-demand", "8,2", "--seed", "5"]
    runs = {
        "curve": [],
        "solve": ["--horizon", "24"],
        "bench-accuracy": ["--horizon", "24", "--delta", "8"],
        "bench-runtime": ["--horizon", "24", "--delta", "8"],
        "report": [],
        "compare-arbitrage": [],
        "selftest": ["--cases", "10"],
    }
    differ = []
    for cmd, extra in runs.items():
        outs = []
        for k in range(2):
            out = tmp_path / f"{cmd}-{k}"
            assert main([cmd, *common, *extra, "--out", str(out)]) == 0
            outs.append(sorted(out.glob("*.json")))
        for a, b in zip(*outs):
            if cmd == "bench-runtime":
                same = _strip_timing(json.loads(a.read_text())) == _strip_timing(json.loads(b.read_text()))
            else:
                same = a.read_bytes() == b.read_bytes()
            if not same:
                differ.append(a.name)
    ok = not differ
    criterion("AC10", ok, f"byte-identical JSON across two runs for {len(runs)} subcommands: {differ or 'all identical'}")
    assert ok
