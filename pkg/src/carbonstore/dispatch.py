"""Merit-order dispatch and the piecewise-linear fuel/carbon/social cost curves.

A fleet is dispatched in ascending order of marginal fuel cost. The resulting
fuel cost ``f(x)`` is convex in demand ``x``, but the carbon cost ``c(x)``
follows the same fill order, so the social cost ``C(x) = f(x) + c(x)`` is in
general non-convex: its marginal can drop at a breakpoint when a cheap, dirty
unit is followed by a costlier, cleaner one.

All cost functions accept scalars or numpy arrays and evaluate segment-wise
from cumulative sums stored at the breakpoints.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import OutOfRangeError, ValidationError

__all__ = [
    "Generator",
    "Fleet",
    "MeritOrder",
    "CostCurve",
    "build_merit_order",
    "build_cost_curve",
    "fleet_curve",
    "fuel_cost",
    "carbon_cost",
    "social_cost",
    "marginal_social_cost",
    "marginal_fuel_cost",
    "dispatch",
    "range_tolerance",
]


def range_tolerance(total_capacity: float) -> float:
    """Absolute slack used when checking ``0 <= x <= X`` on computed purchases."""
    return 1e-9 * max(1.0, float(total_capacity))


@dataclass(frozen=True)
class Generator:
    id: Hashable
    capacity: float
    marginal_fuel_cost: float
    marginal_carbon_emission: float

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValidationError(f"generator {self.id!r}: capacity must be > 0, got {self.capacity}")
        if not self.marginal_fuel_cost >= 0:
            raise ValidationError(
                f"generator {self.id!r}: marginal fuel cost must be >= 0, got {self.marginal_fuel_cost}"
            )
        if not self.marginal_carbon_emission >= 0:
            raise ValidationError(
                f"generator {self.id!r}: marginal carbon emission must be >= 0, "
                f"got {self.marginal_carbon_emission}"
            )


@dataclass(frozen=True)
class Fleet:
    """Generators plus the carbon price ``alpha`` ($/tCO2).

    Marginal carbon cost is always derived as ``alpha * marginal_carbon_emission``.
    """

    generators: tuple[Generator, ...]
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(self.generators) == 0:
            raise ValidationError("fleet must contain at least one generator")
        if not self.alpha >= 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")
        seen = set()
        for g in self.generators:
            if g.id in seen:
                raise ValidationError(f"duplicate generator id {g.id!r}")
            seen.add(g.id)

    @classmethod
    def from_arrays(cls, capacity, fuel_cost, carbon_emission, alpha=0.0, ids=None):
        """Build a fleet from parallel arrays; ids default to ``1..n``."""
        capacity = np.atleast_1d(np.asarray(capacity, dtype=float))
        fuel_cost = np.atleast_1d(np.asarray(fuel_cost, dtype=float))
        carbon_emission = np.atleast_1d(np.asarray(carbon_emission, dtype=float))
        if not (capacity.shape == fuel_cost.shape == carbon_emission.shape):
            raise ValidationError("capacity, fuel_cost and carbon_emission must have equal length")
        if ids is None:
            ids = range(1, len(capacity) + 1)
        gens = [
            Generator(i, float(c), float(f), float(e))
            for i, c, f, e in zip(ids, capacity, fuel_cost, carbon_emission)
        ]
        return cls(tuple(gens), float(alpha))

    def with_alpha(self, alpha: float) -> "Fleet":
        return Fleet(self.generators, float(alpha))

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([g.capacity for g in self.generators], dtype=float)

    @property
    def fuel_costs(self) -> np.ndarray:
        return np.array([g.marginal_fuel_cost for g in self.generators], dtype=float)

    @property
    def carbon_emissions(self) -> np.ndarray:
        return np.array([g.marginal_carbon_emission for g in self.generators], dtype=float)

    @property
    def carbon_costs(self) -> np.ndarray:
        return self.alpha * self.carbon_emissions

    @property
    def total_capacity(self) -> float:
        return float(np.cumsum(self.capacities)[-1])


@dataclass(frozen=True)
class MeritOrder:
    """Dispatch permutation (0-based generator indices) and cumulative capacity."""

    permutation: tuple[int, ...]
    cumulative_capacity: np.ndarray = field(repr=False)

    @property
    def capacities(self) -> np.ndarray:
        return np.diff(self.cumulative_capacity, prepend=0.0)


def _id_key(gid):
    # ids may mix types; numbers sort numerically, everything else by string form
    if isinstance(gid, (int, float, np.integer, np.floating)):
        return (0, float(gid), "")
    return (1, 0.0, str(gid))


def build_merit_order(fleet: Fleet) -> MeritOrder:
    """Sort by fuel cost, then carbon emission, then generator id."""
    if not isinstance(fleet, Fleet) or fleet.n == 0:
        raise ValidationError("build_merit_order needs a non-empty Fleet")
    gens = fleet.generators
    perm = sorted(
        range(len(gens)),
        key=lambda i: (gens[i].marginal_fuel_cost, gens[i].marginal_carbon_emission, _id_key(gens[i].id)),
    )
    caps = np.array([gens[i].capacity for i in perm], dtype=float)
    return MeritOrder(tuple(perm), np.cumsum(caps))


@dataclass(frozen=True, eq=False)
class CostCurve:
    """Piecewise-linear fuel, carbon and social cost of a merit-ordered fleet.

    Segment ``k`` covers ``[x_lo[k], x_hi[k])`` with marginal fuel cost ``mf[k]``,
    marginal carbon cost ``mc[k]`` and marginal social cost ``ms = mf + mc``.
    ``cum_fuel[k]`` and ``cum_carbon[k]`` are the integrals up to ``x_lo[k]``.
    """

    x_lo: np.ndarray
    x_hi: np.ndarray
    mf: np.ndarray
    mc: np.ndarray
    cum_fuel: np.ndarray
    cum_carbon: np.ndarray

    @property
    def ms(self) -> np.ndarray:
        return self.mf + self.mc

    @property
    def total_capacity(self) -> float:
        return float(self.x_hi[-1])

    @property
    def max_marginal_social(self) -> float:
        return float(np.max(self.ms))

    @property
    def breakpoints(self) -> np.ndarray:
        return np.append(self.x_lo, self.x_hi[-1])

    @property
    def segments(self) -> list[tuple[float, float, float, float, float]]:
        return [
            (float(a), float(b), float(f), float(c), float(f + c))
            for a, b, f, c in zip(self.x_lo, self.x_hi, self.mf, self.mc)
        ]

    def __len__(self):
        return len(self.x_lo)

    def __repr__(self):
        return (
            f"CostCurve(segments={len(self)}, X={self.total_capacity:g}, "
            f"max_marginal_social={self.max_marginal_social:g})"
        )


def build_cost_curve(fleet: Fleet, order: MeritOrder | None = None, merge: bool = True) -> CostCurve:
    if order is None:
        order = build_merit_order(fleet)
    if len(order.permutation) != fleet.n:
        raise ValidationError("merit order does not match fleet size")
    perm = list(order.permutation)
    caps = fleet.capacities[perm]
    mf = fleet.fuel_costs[perm]
    mc = fleet.carbon_costs[perm]

    if merge:
        keep_caps, keep_mf, keep_mc = [caps[0]], [mf[0]], [mc[0]]
        for w, f, c in zip(caps[1:], mf[1:], mc[1:]):
            if f == keep_mf[-1] and c == keep_mc[-1]:
                keep_caps[-1] += w
            else:
                keep_caps.append(w)
                keep_mf.append(f)
                keep_mc.append(c)
        caps, mf, mc = np.array(keep_caps), np.array(keep_mf), np.array(keep_mc)

    x_hi = np.cumsum(caps)
    x_lo = np.concatenate(([0.0], x_hi[:-1]))
    widths = x_hi - x_lo
    cum_fuel = np.concatenate(([0.0], np.cumsum(mf * widths)[:-1]))
    cum_carbon = np.concatenate(([0.0], np.cumsum(mc * widths)[:-1]))
    return CostCurve(x_lo, x_hi, mf, mc, cum_fuel, cum_carbon)


def fleet_curve(fleet: Fleet) -> CostCurve:
    """Shortcut for ``build_cost_curve(fleet, build_merit_order(fleet))``."""
    return build_cost_curve(fleet, build_merit_order(fleet))


def _locate(curve: CostCurve, x, allow_top: bool = True):
    x = np.asarray(x, dtype=float)
    X = curve.total_capacity
    tol = range_tolerance(X)
    ok = (x >= -tol) & ((x <= X + tol) if allow_top else (x < X))
    if not np.all(ok):
        bad = np.atleast_1d(x)[~np.atleast_1d(ok)][0]
        raise OutOfRangeError(f"demand {bad!r} outside [0, {X}{']' if allow_top else ')'}")
    x = np.clip(x, 0.0, X)
    # right-continuous lookup: segment k holds x_lo[k] <= x < x_hi[k]; x == X maps to the last
    idx = np.searchsorted(curve.x_hi, x, side="right")
    idx = np.minimum(idx, len(curve.x_hi) - 1)
    return x, idx


def _ret(value):
    return float(value) if np.ndim(value) == 0 else value


def fuel_cost(curve: CostCurve, x):
    x, k = _locate(curve, x)
    return _ret(curve.cum_fuel[k] + curve.mf[k] * (x - curve.x_lo[k]))


def carbon_cost(curve: CostCurve, x):
    x, k = _locate(curve, x)
    return _ret(curve.cum_carbon[k] + curve.mc[k] * (x - curve.x_lo[k]))


def social_cost(curve: CostCurve, x):
    """Fuel plus carbon cost, sharing a single segment lookup."""
    x, k = _locate(curve, x)
    dx = x - curve.x_lo[k]
    return _ret((curve.cum_fuel[k] + curve.mf[k] * dx) + (curve.cum_carbon[k] + curve.mc[k] * dx))


def cost_components(curve: CostCurve, x):
    """Return ``(fuel, carbon, social)`` at ``x`` with social = fuel + carbon exactly."""
    x, k = _locate(curve, x)
    dx = x - curve.x_lo[k]
    f = curve.cum_fuel[k] + curve.mf[k] * dx
    c = curve.cum_carbon[k] + curve.mc[k] * dx
    return _ret(f), _ret(c), _ret(f + c)


def marginal_social_cost(curve: CostCurve, x):
    """Slope of ``C`` at ``x``; right-continuous, defined on ``[0, X)``."""
    _, k = _locate(curve, x, allow_top=False)
    return _ret(curve.mf[k] + curve.mc[k])


def marginal_fuel_cost(curve: CostCurve, x):
    _, k = _locate(curve, x, allow_top=False)
    return _ret(curve.mf[k])


def dispatch(curve: CostCurve, order: MeritOrder, x: float) -> np.ndarray:
    """Per-generator output in original fleet order for demand ``x``."""
    x, _ = _locate(curve, x)
    x = float(x)
    caps = order.capacities
    below = order.cumulative_capacity - caps
    filled = np.clip(x - below, 0.0, caps)
    out = np.zeros(len(order.permutation))
    out[list(order.permutation)] = filled
    return out


def is_nondecreasing(values: Sequence[float]) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) >= 0))
