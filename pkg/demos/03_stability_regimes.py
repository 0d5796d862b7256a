"""Deterministic stability structure of the positive equilibrium.

Walks through the regime classification for the unimodal Mackey-Glass
family: where the positive steady state exists, where it is stable for
every delay, and where a critical delay destabilizes it.  The critical
delay from the closed formula is cross-checked against the zero crossing
of the leading characteristic root of the linearization.

Run:  python demos/03_stability_regimes.py
"""

import numpy as np

from sddesim.analysis import (
    characteristic_roots,
    classify_regime,
    hopf_crossing_tau,
    hopf_threshold,
    stability_report,
)
from sddesim.models import MackeyGlass

print("=== the workhorse parameter set (gamma=5, r=10, p=8, tau=1) ===")
report = stability_report(5.0, 10.0, MackeyGlass(p=8), tau=1.0)
for line in report.lines():
    print("  " + line)

print()
print("=== closed-form threshold vs root crossing ===")
tau0 = hopf_threshold(5.0, 10.0, 8.0)
tau_cross = hopf_crossing_tau(5.0, 10.0, 8.0)
print(f"  formula tau_0   = {tau0:.9f}")
print(f"  root crossing   = {tau_cross:.9f}")
print(f"  agreement       = {abs(tau0 - tau_cross):.2e}")

print()
print("=== leading roots of the zero-state equation for a few delays ===")
for tau in (0.05, 0.2, 1.0):
    roots = characteristic_roots(5.0, 10.0, 1.0, tau, n_roots=3)
    lead = ", ".join(f"{lam:.4f}" for lam in roots)
    print(f"  tau = {tau:<5} leading roots: {lead}")

print()
print("=== regime map over the (gamma/r, p) plane at tau = 1 ===")
ps = [3.0, 4.0, 6.0, 8.0, 12.0]
ratios = np.linspace(0.2, 1.2, 11)
header = "  gamma/r " + " ".join(f"p={p:<4g}" for p in ps)
print(header)
tags = {"(i)": "stable*", "(ii)-stable": "stable", "(ii)-unstable": "osc",
        "no-positive-steady-state": "none", "boundary": "edge"}
for ratio in ratios:
    row = [f"  {ratio:7.2f}"]
    for p in ps:
        tag = classify_regime(ratio * 10.0, 10.0, p, 1.0)
        row.append(f"{tags[tag]:<6}")
    print(" ".join(row))
print("  (stable* = stable for every delay; osc = oscillatory at tau = 1)")
