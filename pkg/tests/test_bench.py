import numpy as np
import pytest

from carbonstore import DemandProfile, Fleet, StorageSpec, ValidationError, fleet_curve, solve_dp
from carbonstore.bench import accuracy_sweep, arbitrage_comparison, reduction_report, runtime_sweep
from carbonstore.errors import InfeasibleError
from carbonstore.selftest import random_bounded_instance


@pytest.fixture
def small_instance():
    return random_bounded_instance(np.random.default_rng(11), T=24, grid_steps=8, delta=2.0)


def test_accuracy_identical_grid(small_instance):
    curve, profile, spec = small_instance
    (p,) = accuracy_sweep(curve, profile, spec, [0.5], 0.5)
    assert p.gamma == 0


def test_accuracy_recomputed(small_instance):
    curve, profile, spec = small_instance
    points = accuracy_sweep(curve, profile, spec, [2.0, 4.0], 0.125)
    ref = solve_dp(curve, profile, spec.with_delta(0.125)).optimal_cost
    for p in points:
        cost = solve_dp(curve, profile, spec.with_delta(p.delta)).optimal_cost
        assert p.cost_at_delta == cost and p.cost_at_reference == ref
        assert p.gamma == (cost - ref) / (curve.max_marginal_social * 24)
        assert -1e-9 <= p.gamma <= p.delta


def test_accuracy_rejects_non_nested(small_instance):
    curve, profile, spec = small_instance
    with pytest.raises(ValidationError):
        accuracy_sweep(curve, profile, spec, [2.0], 0.75)


def test_runtime_sweep(small_instance):
    curve, profile, spec = small_instance
    (one,) = runtime_sweep(curve, profile, spec, [2.0], repeats=1)
    assert one.wall_time > 0
    a, b = runtime_sweep(curve, profile, spec, [2.0, 1.0], repeats=1)
    # 9 and 17 grid points over 24 stages
    assert a.transitions_evaluated == 2 * 9 + 22 * 81
    assert b.transitions_evaluated == 2 * 17 + 22 * 289
    again = runtime_sweep(curve, profile, spec, [2.0, 1.0], repeats=1)
    assert [p.transitions_evaluated for p in again] == [a.transitions_evaluated, b.transitions_evaluated]
    with pytest.raises(ValidationError):
        runtime_sweep(curve, profile, spec, [])


NONCONVEX = Fleet.from_arrays([10, 10], [30, 60], [2.0, 0.1], alpha=20.0)


def test_report_zero_storage():
    profile = DemandProfile(np.tile([5.0, 15.0], 24))
    rep = reduction_report(NONCONVEX, profile, 0.0, 1.0)
    assert rep.days == 2
    for arr in (rep.social_reduction, rep.carbon_reduction, rep.fuel_reduction):
        assert np.all(arr == 0)


def test_report_linear_curve_no_value():
    fleet = Fleet.from_arrays([100], [40], [0.5], alpha=3.0)
    rep = reduction_report(fleet, DemandProfile(np.full(24, 50.0)), 0.2, 1.0)
    assert rep.social_reduction[0] == pytest.approx(0, abs=1e-9)


def test_report_nonconvex_gain():
    # alternate below/above the 10 MWh breakpoint where the marginal drops 70 -> 62
    profile = DemandProfile(np.tile([5.0, 15.0], 12))
    rep = reduction_report(NONCONVEX, profile, 0.4, 1.0)
    assert rep.social_reduction[0] > 0
    assert rep.social_reduction[0] == pytest.approx(rep.carbon_reduction[0] + rep.fuel_reduction[0], rel=1e-9)
    assert rep.peak_demand[0] == 15
    # cleaner but costlier: the carbon saving is paid for in fuel
    assert rep.carbon_reduction[0] > 0 > rep.fuel_reduction[0]


def test_report_validation():
    with pytest.raises(ValidationError):
        reduction_report(NONCONVEX, DemandProfile(np.ones(25)), 0.2, 1.0)
    with pytest.raises(InfeasibleError, match="day 1"):
        reduction_report(NONCONVEX, DemandProfile(np.r_[np.ones(24), np.full(24, 25.0)]), 0.1, 1.0)


def test_arbitrage_alpha_zero_equal():
    fleet = Fleet.from_arrays([10, 10, 10], [20, 40, 60], [1, 0.5, 0.1])
    profile = DemandProfile(np.tile([5.0, 12.0, 25.0], 8))
    aware, arb = arbitrage_comparison(fleet, profile, 0.3, 1.0, 0.0)
    assert np.array_equal(aware.optimized_social, arb.optimized_social)


def test_arbitrage_adversarial_gap():
    # at alpha = 3 the cheap unit (ms 66) is worse than the dear one (ms 60);
    # fuel-only arbitrage levels purchases into the cheap, dirty unit
    fleet = Fleet.from_arrays([10, 10], [30, 60], [12.0, 0.0])
    profile = DemandProfile(np.tile([5.0, 15.0], 12))
    aware, arb = arbitrage_comparison(fleet, profile, 0.4, 1.0, 3.0)
    assert aware.optimized_social[0] < arb.optimized_social[0]
    assert arb.social_reduction[0] < 0 < aware.social_reduction[0]
