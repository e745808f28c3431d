"""How the grid step trades accuracy against work."""
from carbonstore import StorageSpec, error_bound, fleet_curve
from carbonstore.bench import accuracy_sweep, runtime_sweep
from carbonstore.data import scale_demand, synth_demand, synth_fleet

fleet = synth_fleet(seed=3, n=30).with_alpha(20.0)
curve = fleet_curve(fleet)
profile = scale_demand(synth_demand(seed=3, days=1), fleet, 0.9)
B = 0.2 * profile.peak
base = StorageSpec.centered(B, B / 40)
# every swept step must divide B/2 so the start state stays on the grid
deltas = [B / 80, B / 40, B / 20, B / 10]

print("delta      gamma      gamma/delta   worst-case bound")
for p in accuracy_sweep(curve, profile, base, deltas, B / 160):
    bound = error_bound(curve, profile.horizon, p.delta)
    print(f"{p.delta:7.3f} {p.gamma:10.3e} {p.gamma / p.delta:12.3e} {bound:14.1f}")

# Halving delta roughly doubles the grid, and interior stages score every
# (state, predecessor) pair, so work grows about fourfold.
print("\ndelta    seconds    transitions")
for p in runtime_sweep(curve, profile, base, [B / 20, B / 40, B / 80]):
    print(f"{p.delta:7.3f} {p.wall_time:9.4f} {p.transitions_evaluated:12d}")
