"""Why a carbon price can make the social cost curve non-convex.

Cheap coal burns dirty, expensive gas burns clean. Ordered by fuel cost the
fuel marginal rises, but once carbon is priced the social marginal can fall
at the coal-to-gas boundary.
"""
import numpy as np

from carbonstore import Fleet, build_merit_order, fleet_curve, marginal_social_cost, social_cost

fleet = Fleet.from_arrays(
    capacity=[100, 100, 100],
    fuel_cost=[30, 60, 80],
    carbon_emission=[1.0, 0.5, 0.2],
    ids=["coal", "gas", "peaker"],
)

for alpha in (3.0, 100.0):
    curve = fleet_curve(fleet.with_alpha(alpha))
    print(f"\nalpha = {alpha:g} $/t")
    print("  x_lo   x_hi     mf     mc     ms")
    for lo, hi, mf, mc, ms in curve.segments:
        print(f"{lo:6.0f} {hi:6.0f} {mf:6.1f} {mc:6.1f} {ms:6.1f}")
    drops = np.diff(curve.ms) < 0
    print("  social marginal drops at", curve.x_hi[:-1][drops].tolist() or "nowhere")

# the merit order never changes with alpha: it is set by fuel cost alone
order = build_merit_order(fleet.with_alpha(100.0))
print("\nmerit order:", [fleet.generators[i].id for i in order.permutation])

# A drop means a smaller load can cost more per MWh than a larger one.
curve = fleet_curve(fleet.with_alpha(100.0))
xs = np.array([50.0, 150.0])
print("marginal social cost at", xs.tolist(), "->", marginal_social_cost(curve, xs).tolist())
print("total social cost at 150 MWh:", social_cost(curve, 150.0))
