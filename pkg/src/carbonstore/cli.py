"""Command line front end.

Every subcommand writes ``<name>.json`` (machine-readable, deterministic apart
from the ``timing`` block) and one or more CSV files of plot data into
``--out``. Exit codes: 0 ok, 1 selftest failure, 2 validation error,
3 infeasible, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import bench, data, oracle
from .dispatch import build_cost_curve, build_merit_order
from .errors import BudgetError, CarbonStoreError, InfeasibleError, ValidationError
from .storage import DemandProfile, StorageSpec, error_bound, solve_dp

__all__ = ["RunConfig", "main", "run", "build_parser"]

EXIT_OK, EXIT_SELFTEST, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4
SUBCOMMANDS = ("curve", "solve", "bench-accuracy", "bench-runtime", "report", "compare-arbitrage", "selftest")


@dataclass
class RunConfig:
    fleet: str | None = None
    synth_fleet: str | None = None
    demand: str | None = None
    synth_demand: str | None = None
    alpha: float = 3.0
    delta: float | None = None
    ref_delta: float | None = None
    deltas: str | None = None
    storage_frac: float = 0.20
    capacity: float | None = None
    peak_target: float | None = None
    horizon: int | None = None
    start: int = 0
    seed: int = 0
    out: str = "out"
    cases: int = 50

    def validate(self):
        if self.fleet and self.synth_fleet:
            raise ValidationError("give at most one of --fleet and --synth-fleet")
        if self.demand and self.synth_demand:
            raise ValidationError("give at most one of --demand and --synth-demand")
        if not self.alpha >= 0:
            raise ValidationError("--alpha must be >= 0")
        if self.delta is not None and not self.delta > 0:
            raise ValidationError("--delta must be > 0")
        if self.ref_delta is not None and not self.ref_delta > 0:
            raise ValidationError("--ref-delta must be > 0")
        if not self.storage_frac >= 0:
            raise ValidationError("--storage-frac must be >= 0")
        if self.capacity is not None and not self.capacity >= 0:
            raise ValidationError("--capacity must be >= 0")
        if self.peak_target is not None and not 0 < self.peak_target <= 1:
            raise ValidationError("--peak-target must be in (0, 1]")
        if self.horizon is not None and self.horizon < 1:
            raise ValidationError("--horizon must be >= 1")
        if self.start < 0 or self.seed < 0 or self.cases < 1:
            raise ValidationError("--start/--seed must be >= 0 and --cases >= 1")
        return self

    def echo(self):
        # output directory left out so runs into different dirs compare equal
        return {k: v for k, v in vars(self).items() if k != "out"}


def _floats(spec: str, name: str):
    try:
        return [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse {name} value {spec!r}") from None


def _fleet(cfg: RunConfig):
    if cfg.fleet:
        return data.load_fleet(cfg.fleet, alpha=cfg.alpha)
    if cfg.synth_fleet:
        p = _floats(cfg.synth_fleet, "--synth-fleet")
        if len(p) not in (2, 8):
            raise ValidationError("--synth-fleet takes SEED,N or SEED,N,CAPLO,CAPHI,MFLO,MFHI,MCELO,MCEHI")
        kw = {}
        if len(p) == 8:
            kw = dict(capacity_range=p[2:4], mf_range=p[4:6], mce_range=p[6:8])
        return data.synth_fleet(int(p[0]), int(p[1]), **kw).with_alpha(cfg.alpha)
    return data.synth_fleet(cfg.seed, 30).with_alpha(cfg.alpha)


def _demand(cfg: RunConfig, fleet) -> DemandProfile:
    if cfg.demand:
        profile = data.load_demand(cfg.demand)
        if cfg.peak_target is not None:
            profile = data.scale_demand(profile, fleet, cfg.peak_target)
        return profile
    if cfg.synth_demand:
        p = _floats(cfg.synth_demand, "--synth-demand")
        if len(p) not in (2, 5):
            raise ValidationError("--synth-demand takes SEED,DAYS or SEED,DAYS,BASE,AMPLITUDE,NOISE")
        kw = dict(base=p[2], amplitude=p[3], noise=p[4]) if len(p) == 5 else {}
        profile = data.synth_demand(int(p[0]), int(p[1]), **kw)
    else:
        profile = data.synth_demand(cfg.seed, 7)
    target = 0.9 if cfg.peak_target is None else cfg.peak_target
    return data.scale_demand(profile, fleet, target)


def _window(cfg: RunConfig, profile: DemandProfile) -> DemandProfile:
    stop = profile.horizon if cfg.horizon is None else cfg.start + cfg.horizon
    if cfg.start >= profile.horizon or stop > profile.horizon:
        raise ValidationError(f"window [{cfg.start}, {stop}) exceeds the {profile.horizon}-step profile")
    return profile.window(cfg.start, stop)


def _capacity(cfg: RunConfig, profile: DemandProfile) -> float:
    return cfg.capacity if cfg.capacity is not None else cfg.storage_frac * profile.peak


def _delta(cfg: RunConfig, capacity: float) -> float:
    if cfg.delta is not None:
        return cfg.delta
    return capacity / 50 if capacity > 0 else 1.0


def _deltas(cfg: RunConfig, delta: float):
    if cfg.deltas:
        return _floats(cfg.deltas, "--deltas")
    return [delta * k for k in (1, 2, 4, 8)]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(out, name, payload):
    data.atomic_write(os.path.join(out, name), json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(out, name, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    data.atomic_write(os.path.join(out, name), "\n".join(lines) + "\n")


def _curve_payload(fleet, curve, order):
    return {
        "merit_order": [fleet.generators[i].id for i in order.permutation],
        "segments": [dict(zip(("x_lo", "x_hi", "mf", "mc", "ms"), s)) for s in curve.segments],
        "total_capacity": curve.total_capacity,
        "max_marginal_social": curve.max_marginal_social,
    }


def cmd_curve(cfg, out):
    fleet = _fleet(cfg)
    order = build_merit_order(fleet)
    curve = build_cost_curve(fleet, order)
    _write_json(out, "curve.json", {"config": cfg.echo(), "curve": _curve_payload(fleet, curve, order)})
    _write_csv(out, "curve.csv", ["x_lo", "x_hi", "mf", "mc", "ms"], curve.segments)
    steps = []
    for lo, hi, f, c, s in curve.segments:
        steps.append((lo, f, c, s))
        steps.append((hi, f, c, s))
    _write_csv(out, "marginal.csv", ["x", "mf", "mc", "ms"], steps)
    return EXIT_OK


def _schedule_payload(sched, profile):
    return {
        "states": sched.states,
        "purchases": sched.purchases,
        "demands": profile.demands,
        "fuel": sched.fuel,
        "carbon": sched.carbon,
        "social": sched.social,
        "total_fuel": sched.total_fuel,
        "total_carbon": sched.total_carbon,
        "total_social": sched.total_social,
    }


def cmd_solve(cfg, out):
    fleet = _fleet(cfg)
    curve = build_cost_curve(fleet, build_merit_order(fleet))
    profile = _window(cfg, _demand(cfg, fleet))
    capacity = _capacity(cfg, profile)
    spec = StorageSpec.centered(capacity, _delta(cfg, capacity))
    res = solve_dp(curve, profile, spec, keep_table=False)
    payload = {
        "config": cfg.echo(),
        "storage": {"capacity": spec.capacity, "delta": spec.delta, "s_initial": spec.s_initial, "s_final": spec.s_final},
        "optimal_cost": res.optimal_cost,
        "transitions_evaluated": res.transitions_evaluated,
        "error_bound": error_bound(curve, profile.horizon, spec.delta),
        "schedule": _schedule_payload(res.schedule, profile),
    }
    _write_json(out, "solve.json", payload)
    s = res.schedule
    rows = [
        (t + 1, s.states[t + 1], s.purchases[t], profile.demands[t], s.fuel[t], s.carbon[t], s.social[t])
        for t in range(profile.horizon)
    ]
    _write_csv(out, "schedule.csv", ["t", "state", "purchase", "demand", "fuel", "carbon", "social"], rows)
    return EXIT_OK


def cmd_bench_accuracy(cfg, out):
    fleet = _fleet(cfg)
    curve = build_cost_curve(fleet, build_merit_order(fleet))
    profile = _window(cfg, _demand(cfg, fleet))
    capacity = _capacity(cfg, profile)
    delta = _delta(cfg, capacity)
    ref = cfg.ref_delta if cfg.ref_delta is not None else delta / 16
    deltas = _deltas(cfg, delta)
    # boundaries at B/2 must sit on every grid in the sweep
    spec = StorageSpec.centered(capacity, max(deltas))
    points = bench.accuracy_sweep(curve, profile, spec, deltas, ref)
    rows = [(p.delta, p.cost_at_delta, p.cost_at_reference, p.gamma, p.delta) for p in points]
    _write_json(
        out,
        "accuracy.json",
        {
            "config": cfg.echo(),
            "reference_delta": ref,
            "max_marginal_social": curve.max_marginal_social,
            "horizon": profile.horizon,
            "points": [dict(zip(("delta", "cost_at_delta", "cost_at_reference", "gamma", "gamma_bound"), r)) for r in rows],
        },
    )
    _write_csv(out, "accuracy.csv", ["delta", "cost_at_delta", "cost_at_reference", "gamma", "gamma_bound"], rows)
    return EXIT_OK


def cmd_bench_runtime(cfg, out):
    fleet = _fleet(cfg)
    curve = build_cost_curve(fleet, build_merit_order(fleet))
    profile = _window(cfg, _demand(cfg, fleet))
    capacity = _capacity(cfg, profile)
    deltas = _deltas(cfg, _delta(cfg, capacity))
    spec = StorageSpec.centered(capacity, max(deltas))
    points = bench.runtime_sweep(curve, profile, spec, deltas)
    _write_json(
        out,
        "runtime.json",
        {
            "config": cfg.echo(),
            "points": [{"delta": p.delta, "transitions_evaluated": p.transitions_evaluated} for p in points],
            "timing": {"wall_time_median_s": [p.wall_time for p in points]},
        },
    )
    _write_csv(
        out,
        "runtime.csv",
        ["delta", "wall_time_s", "transitions_evaluated"],
        [(p.delta, p.wall_time, p.transitions_evaluated) for p in points],
    )
    return EXIT_OK


_REPORT_COLS = ["day", "peak_demand", "social_reduction", "carbon_reduction", "fuel_reduction", "baseline_social", "optimized_social"]


def _report_payload(rep):
    return {"capacity": rep.capacity, "days": list(rep.rows())}


def cmd_report(cfg, out):
    fleet = _fleet(cfg)
    profile = _demand(cfg, fleet)
    capacity = cfg.storage_frac * profile.peak
    rep = bench.reduction_report(fleet, profile, cfg.storage_frac, _delta(cfg, capacity))
    _write_json(out, "report.json", {"config": cfg.echo(), "report": _report_payload(rep)})
    _write_csv(out, "report.csv", _REPORT_COLS, [[r[c] for c in _REPORT_COLS] for r in rep.rows()])
    return EXIT_OK


def cmd_compare(cfg, out):
    fleet = _fleet(cfg)
    profile = _demand(cfg, fleet)
    capacity = cfg.storage_frac * profile.peak
    aware, arb = bench.arbitrage_comparison(fleet, profile, cfg.storage_frac, _delta(cfg, capacity), cfg.alpha)
    _write_json(
        out,
        "compare.json",
        {"config": cfg.echo(), "carbon_aware": _report_payload(aware), "arbitrage": _report_payload(arb)},
    )
    rows = [
        (d, aware.peak_demand[d], aware.social_reduction[d], arb.social_reduction[d], aware.optimized_social[d], arb.optimized_social[d])
        for d in range(aware.days)
    ]
    _write_csv(
        out,
        "compare.csv",
        ["day", "peak_demand", "aware_social_reduction", "arbitrage_social_reduction", "aware_social", "arbitrage_social"],
        rows,
    )
    return EXIT_OK


def cmd_selftest(cfg, out):
    from . import selftest

    result = selftest.run_all(seed=cfg.seed, cases=cfg.cases)
    _write_json(out, "selftest.json", {"config": cfg.echo(), **result})
    for check in result["checks"]:
        print(f"{'PASS' if check['passed'] else 'FAIL'}  {check['name']}: {check['detail']}")
    return EXIT_OK if result["passed"] else EXIT_SELFTEST


COMMANDS = {
    "curve": cmd_curve,
    "solve": cmd_solve,
    "bench-accuracy": cmd_bench_accuracy,
    "bench-runtime": cmd_bench_runtime,
    "report": cmd_report,
    "compare-arbitrage": cmd_compare,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("data sources")
    src.add_argument("--fleet", metavar="PATH", help="fleet CSV")
    src.add_argument("--synth-fleet", metavar="SEED,N[,...]", help="synthetic fleet spec")
    src.add_argument("--demand", metavar="PATH", help="hourly demand CSV")
    src.add_argument("--synth-demand", metavar="SEED,DAYS[,...]", help="synthetic demand spec")
    par = common.add_argument_group("parameters")
    par.add_argument("--alpha", type=float, default=3.0, help="carbon price $/tCO2 (default 3)")
    par.add_argument("--delta", type=float, help="grid step in MWh (default B/50)")
    par.add_argument("--ref-delta", type=float, help="reference step for bench-accuracy (default delta/16)")
    par.add_argument("--deltas", metavar="D1,D2,...", help="steps swept by the bench commands")
    par.add_argument("--storage-frac", type=float, default=0.20, help="storage capacity as a fraction of peak demand")
    par.add_argument("--capacity", type=float, help="explicit storage capacity in MWh (overrides --storage-frac for solve/bench)")
    par.add_argument("--peak-target", type=float, help="rescale demand peak to this fraction of fleet capacity")
    par.add_argument("--horizon", type=int, help="number of steps to solve (default: whole profile)")
    par.add_argument("--start", type=int, default=0, help="first step of the solve window")
    par.add_argument("--seed", type=int, default=0, help="seed for synthetic data and selftest")
    par.add_argument("--cases", type=int, default=50, help="random cases per selftest suite")
    par.add_argument("--out", default="out", help="output directory")

    parser = argparse.ArgumentParser(prog="carbonstore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "curve": "emit merit-order cost curve segments and marginal plot data",
        "solve": "solve one horizon by dynamic programming",
        "bench-accuracy": "normalized accuracy gamma across grid steps",
        "bench-runtime": "wall time and transition counts across grid steps",
        "report": "daily cost reductions over the demand profile",
        "compare-arbitrage": "carbon-aware vs fuel-only storage schedules",
        "selftest": "oracle equivalence and error-bound property checks",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def run(config: RunConfig, subcommand: str) -> int:
    config.validate()
    os.makedirs(config.out, exist_ok=True)
    return COMMANDS[subcommand](config, config.out)


def _fail(code, exc):
    err = {"error": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "stage", None) is not None:
        err["stage"] = exc.stage
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    try:
        return run(RunConfig(**args), command)
    except InfeasibleError as exc:
        return _fail(EXIT_INFEASIBLE, exc)
    except (ValidationError, BudgetError) as exc:
        return _fail(EXIT_VALIDATION, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except CarbonStoreError as exc:
        return _fail(EXIT_VALIDATION, exc)


def fixture_path(name: str):
    """Filesystem path of a file shipped in ``carbonstore/fixtures``."""
    return resources.files("carbonstore") / "fixtures" / name


if __name__ == "__main__":
    sys.exit(main())
