"""Fleet and demand files, demand scaling, and seeded synthetic stand-ins.

File formats (UTF-8, ``.`` decimal separator, header row required)::

    fleet:  id,capacity_mwh,fuel_cost_usd_per_mwh,carbon_t_per_mwh
    demand: timestamp_iso8601,demand_mwh      (strictly hourly)

Numbers are written with ``repr`` so a save/load round trip is bit-exact.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from datetime import datetime, timedelta

import numpy as np

from .dispatch import Fleet, Generator
from .errors import ParseError, ValidationError
from .storage import DemandProfile

__all__ = [
    "FLEET_HEADER",
    "DEMAND_HEADER",
    "load_fleet",
    "save_fleet",
    "load_demand",
    "save_demand",
    "scale_demand",
    "synth_fleet",
    "synth_demand",
    "atomic_write",
]

FLEET_HEADER = ["id", "capacity_mwh", "fuel_cost_usd_per_mwh", "carbon_t_per_mwh"]
DEMAND_HEADER = ["timestamp_iso8601", "demand_mwh"]
DEFAULT_START = datetime(2018, 1, 1)
HOUR = timedelta(hours=1)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_rows(path, header):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: file is empty") from None
        if [h.strip() for h in first] != header:
            raise ParseError(f"expected header {','.join(header)}, got {','.join(first)}", line=1)
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=reader.line_num)
            yield reader.line_num, [c.strip() for c in row]


def _number(text, line, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} {text!r}", line=line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {text!r}", line=line)
    return value


def load_fleet(path, alpha: float = 0.0) -> Fleet:
    """Read a fleet CSV. The carbon price comes from the caller, never the file."""
    gens = []
    for line, (gid, cap, mf, mce) in _read_rows(path, FLEET_HEADER):
        if not gid:
            raise ParseError("empty generator id", line=line)
        gens.append(
            Generator(
                gid,
                _number(cap, line, "capacity"),
                _number(mf, line, "fuel cost"),
                _number(mce, line, "carbon emission"),
            )
        )
    if not gens:
        raise ValidationError(f"{path}: no generators")
    return Fleet(tuple(gens), alpha)


def _fleet_csv(fleet: Fleet) -> str:
    lines = [",".join(FLEET_HEADER)]
    for g in fleet.generators:
        lines.append(
            f"{g.id},{float(g.capacity)!r},{float(g.marginal_fuel_cost)!r},{float(g.marginal_carbon_emission)!r}"
        )
    return "\n".join(lines) + "\n"


def save_fleet(fleet: Fleet, path) -> None:
    atomic_write(path, _fleet_csv(fleet))


def _parse_time(text, line):
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ParseError(f"bad timestamp {text!r}", line=line) from None


def load_demand(path, return_timestamps: bool = False):
    """Read an hourly demand CSV in file order."""
    stamps, values = [], []
    for line, (ts, dem) in _read_rows(path, DEMAND_HEADER):
        t = _parse_time(ts, line)
        d = _number(dem, line, "demand")
        if d < 0:
            raise ValidationError(f"line {line}: negative demand {d}")
        if stamps:
            step = t - stamps[-1]
            if step <= timedelta(0):
                raise ValidationError(f"line {line}: timestamp {ts} not after the previous one")
            if step != HOUR:
                raise ValidationError(f"line {line}: gap of {step} between hourly rows")
        stamps.append(t)
        values.append(d)
    if not values:
        raise ValidationError(f"{path}: no demand rows")
    profile = DemandProfile(np.array(values))
    return (profile, stamps) if return_timestamps else profile


def save_demand(profile: DemandProfile, path, start: datetime = DEFAULT_START) -> None:
    lines = [",".join(DEMAND_HEADER)]
    for h, d in enumerate(profile.demands):
        lines.append(f"{(start + h * HOUR).isoformat()},{float(d)!r}")
    atomic_write(path, "\n".join(lines) + "\n")


def scale_demand(profile: DemandProfile, fleet: Fleet, peak_target_fraction: float) -> DemandProfile:
    """Rescale so the peak equals ``peak_target_fraction`` of total fleet capacity."""
    if not 0 < peak_target_fraction <= 1:
        raise ValidationError(f"peak target fraction must be in (0, 1], got {peak_target_fraction}")
    peak = profile.peak
    if not peak > 0:
        raise ValidationError("cannot scale an all-zero demand profile")
    target = peak_target_fraction * fleet.total_capacity
    scaled = profile.demands * (target / peak)
    scaled[int(np.argmax(profile.demands))] = target
    return DemandProfile(scaled, profile.errors)


def _check_range(name, rng, lower=0.0, strict=False):
    lo, hi = float(rng[0]), float(rng[1])
    if not (lo <= hi) or lo < lower or (strict and lo <= lower):
        raise ValidationError(f"invalid {name} range {rng}")
    return lo, hi


def synth_fleet(
    seed: int,
    n: int,
    capacity_range=(50.0, 500.0),
    mf_range=(10.0, 90.0),
    mce_range=(0.3, 1.1),
    anticorrelated: bool = True,
) -> Fleet:
    """Seeded random fleet, every attribute uniform on its range.

    With ``anticorrelated`` the emission draws are re-assigned in reverse rank
    of fuel cost, so the cheapest units are the dirtiest (the coal-vs-gas
    pattern that makes the social cost curve non-convex). Marginals stay
    uniform; only the pairing changes.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    cap_lo, cap_hi = _check_range("capacity", capacity_range, strict=True)
    mf_lo, mf_hi = _check_range("fuel cost", mf_range)
    mce_lo, mce_hi = _check_range("carbon emission", mce_range)
    rng = np.random.default_rng(seed)
    cap = rng.uniform(cap_lo, cap_hi, n)
    mf = rng.uniform(mf_lo, mf_hi, n)
    mce = rng.uniform(mce_lo, mce_hi, n)
    if anticorrelated:
        out = np.empty(n)
        out[np.argsort(mf, kind="stable")] = np.sort(mce)[::-1]
        mce = out
    ids = [f"G{i + 1:03d}" for i in range(n)]
    return Fleet.from_arrays(cap, mf, mce, alpha=0.0, ids=ids)


def synth_demand(
    seed: int,
    days: int,
    base: float = 100.0,
    amplitude: float = 30.0,
    noise: float = 5.0,
    phase: float = -math.pi / 2,
) -> DemandProfile:
    """Hourly ``base + amplitude * sin(2*pi*h/24 + phase) + U(-noise, noise)``.

    The default phase puts the trough at midnight and the peak at noon.
    """
    if days < 1:
        raise ValidationError("days must be >= 1")
    if amplitude < 0 or noise < 0 or not base > amplitude + noise:
        raise ValidationError("need base > amplitude + noise >= 0 so demand stays positive")
    rng = np.random.default_rng(seed)
    h = np.arange(24 * days)
    eps = rng.uniform(-noise, noise, h.size) if noise > 0 else np.zeros(h.size)
    return DemandProfile(base + amplitude * np.sin(2 * np.pi * h / 24 + phase) + eps)
