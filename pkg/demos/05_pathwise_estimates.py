"""Pathwise solution envelopes under jump noise.

Simulates the monotone Mackey-Glass system (f(0) = 1 > 0) driven by
Brownian noise plus bounded jumps and checks the two pathwise estimates
on every grid point of every trajectory: an upper envelope that kicks in
whenever the log-state exceeds a level R, and a lower envelope active
below -R.  Both are theorems, so the checkers must report zero
violations beyond the grid tolerance; excursions above R stay within one
effective jump height of it.

Run:  python demos/05_pathwise_estimates.py
"""

from sddesim import MackeyGlass, ModelSpec, NoiseSpec, TrajectoryConfig, simulate_ensemble
from sddesim.bounds import (
    EstimateCheckParams,
    check_pathwise_lower,
    check_pathwise_upper,
    lower_envelope_delta,
)

model = ModelSpec(gamma=1.0, r=2.0, tau=1.0, feedback=MackeyGlass(p=2, q=0),
                  b_coupling=0.5, drift_mode="explicit", a_explicit=0.0)
noise = NoiseSpec(sigma=0.2, lambda_n=1.0, zeta=0.4, jump_law="uniform")
cfg = TrajectoryConfig(dt=5e-3, t_end=80.0, seed=55, store_forcing=True)

print("running 25 jump-driven trajectories with the forcing path recorded ...")
ens = simulate_ensemble(model, noise, 0.0, cfg, n_traj=25)
n_jumps = sum(len(tr.jump_log) for tr in ens)
print(f"{n_jumps} jumps applied in total; effective jump bound "
      f"beta*zeta = {model.b_bound() * noise.zeta}")

delta = lower_envelope_delta(1.0, 2.0, model.feedback)
# levels close to the path's range so the envelopes actually bind
upper = EstimateCheckParams.for_model(model, noise, R=0.2)
lower = EstimateCheckParams.for_model(model, noise, R=0.4, delta=delta)
import math
print(f"lower estimate admissible: e^-R = {math.exp(-lower.R):.3f} "
      f"< delta = {delta:.3f}")

violations = 0
crossings_up = crossings_low = 0
worst_over = 0.0
for tr in ens:
    up = check_pathwise_upper(tr, upper)
    low = check_pathwise_lower(tr, lower)
    violations += up.n_violations + low.n_violations
    crossings_up += int((tr.values >= upper.R).sum())
    crossings_low += int((tr.values <= -lower.R).sum())
    worst_over = max(worst_over, up.max_overshoot)

print(f"grid points above R = {upper.R}: {crossings_up}; "
      f"below -R = {-lower.R}: {crossings_low}")
print(f"violations across all grid points: {violations}")
print(f"worst excursion above R = {upper.R}: {worst_over:.4f} "
      f"(one jump + tolerance = {upper.zeta_eff + 0.05:.3f})")
