"""Schedule a small store over one synthetic day and compare with doing nothing."""
import numpy as np

from carbonstore import StorageSpec, evaluate_schedule, fleet_curve, solve_dp
from carbonstore.data import scale_demand, synth_demand, synth_fleet

fleet = synth_fleet(seed=1, n=20).with_alpha(30.0)
curve = fleet_curve(fleet)
day = scale_demand(synth_demand(seed=1, days=1), fleet, 0.9)

# store sized at a fifth of the daily peak, starting and ending half full
spec = StorageSpec.centered(0.2 * day.peak, delta=0.2 * day.peak / 50)
res = solve_dp(curve, day, spec)
flat = evaluate_schedule(curve, day, np.full(day.horizon + 1, spec.s_initial))

print(f"grid: {len(res.grid)} states, {res.transitions_evaluated} transitions scored")
print(f"no storage : {flat.total_social:12.1f}")
print(f"optimized  : {res.optimal_cost:12.1f}")
print(f"saving     : {flat.total_social - res.optimal_cost:12.1f}")

print("\nhour  demand  purchase  state")
sched = res.schedule
for h in range(day.horizon):
    print(f"{h:4d} {day.demands[h]:7.1f} {sched.purchases[h]:9.1f} {sched.states[h + 1]:6.1f}")

# the store charges when the social marginal is low and drains when it is high
ms_paid = curve.ms[np.searchsorted(curve.x_hi, sched.purchases, side="right")]
print("\nmean marginal social cost while charging :", ms_paid[np.diff(sched.states) > 0].mean().round(2))
print("mean marginal social cost while draining :", ms_paid[np.diff(sched.states) < 0].mean().round(2))
