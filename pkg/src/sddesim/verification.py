"""Empirical verification suite: the toolkit's pass/fail exit criteria.

Each check pins its own tolerance and returns a CheckResult; the `verify`
command prints one line per check and fails the process if any check
fails.  Expensive simulations (the long deterministic run and the noisy
ensembles) are computed once per suite and shared between checks.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import cli_runs
from .analysis import (
    characteristic_roots,
    global_periodic_condition,
    hopf_crossing_tau,
    hopf_threshold,
    residual,
)
from .bounds import (
    EstimateCheckParams,
    SyntheticProcess,
    TailBoundParams,
    bound_composite,
    bound_reverse_sup_brownian,
    bound_reverse_sup_levy,
    bound_window_sup_brownian,
    bound_window_sup_levy,
    check_pathwise_lower,
    check_pathwise_upper,
    lower_envelope_delta,
    mc_verify_tail_bound,
    ultimate_mean_bound,
)
from .config import load_preset
from .measure import MeasureWindow, measure_distance, occupation_histogram
from .models import MackeyGlass, ModelSpec
from .noise import NoiseSpec, levy_moments, sample_noise_path
from .solver import TrajectoryConfig, simulate_ensemble, simulate_transformed

__all__ = ["CheckResult", "AcceptanceSuite", "CRITERIA"]


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float
    runtime_limit: Optional[float] = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.criterion:>2} {self.name}: "
                f"{self.detail} ({self.seconds:.1f}s)")

    @property
    def within_runtime(self) -> bool:
        return self.runtime_limit is None or self.seconds < self.runtime_limit


class AcceptanceSuite:
    """Runs the numbered acceptance checks with shared cached simulations."""

    def __init__(self, workers: int = 1):
        self.workers = workers
        self._cache: dict = {}

    # -- shared runs --------------------------------------------------------

    def fig1_trajectory(self):
        if "fig1" not in self._cache:
            cfg = load_preset("fig1")
            traj = simulate_ensemble(cfg.model, cfg.noise,
                                     cfg.history_for_space("original"),
                                     cfg.trajectory, n_traj=1,
                                     workers=self.workers)[0]
            self._cache["fig1"] = traj
        return self._cache["fig1"]

    def fig_ensemble(self, preset: str):
        if preset not in self._cache:
            cfg = load_preset(preset)
            ens = simulate_ensemble(cfg.model, cfg.noise,
                                    cfg.history_for_space("original"),
                                    cfg.trajectory, cfg.n_trajectories,
                                    workers=self.workers)
            self._cache[preset] = ens
        return self._cache[preset]

    # -- criteria -----------------------------------------------------------

    def check_1_fixed_point(self) -> CheckResult:
        t0 = time.perf_counter()
        model = ModelSpec(gamma=5.0, r=10.0, tau=1.0, feedback=MackeyGlass(p=8),
                          b_coupling=0.0)
        cfg = TrajectoryConfig(dt=1e-3, t_end=100.0)
        traj = simulate_transformed(model, NoiseSpec(sigma=0.0), 0.0, cfg)
        dev = float(np.max(np.abs(traj.values)))
        return CheckResult(1, "fixed-point exactness", dev < 1e-12,
                           f"max |Y| = {dev:.3g} (< 1e-12)",
                           time.perf_counter() - t0, runtime_limit=1.0)

    def check_2_window_invariance(self) -> CheckResult:
        t0 = time.perf_counter()
        traj = self.fig1_trajectory()
        h1 = occupation_histogram(traj, MeasureWindow(5000.0, 2500.0), 200, (0.0, 2.0))
        h2 = occupation_histogram(traj, MeasureWindow(7500.0, 2500.0), 200, (0.0, 2.0))
        d = measure_distance(h1, h2)
        return CheckResult(2, "window invariance", d < 0.05,
                           f"L1([5000,7500] vs [7500,10000]) = {d:.4f} (< 0.05)",
                           time.perf_counter() - t0, runtime_limit=60.0)

    def check_3_positivity(self) -> CheckResult:
        t0 = time.perf_counter()
        mins = [self.fig1_trajectory().values.min()]
        for preset in ("fig2_p4", "fig2_p6", "fig2_p8"):
            ens = self.fig_ensemble(preset)
            mins.append(min(tr.values.min() for tr in ens))
        worst = float(min(mins))
        return CheckResult(3, "positivity/permanence", worst > 0.0,
                           f"min original-space sample = {worst:.6g} (> 0)",
                           time.perf_counter() - t0)

    def check_4_ultimate_mean(self) -> CheckResult:
        t0 = time.perf_counter()
        cfg = load_preset("fig2_p6")
        ens = self.fig_ensemble("fig2_p6")
        idxs = [tr.window_indices(250.0, 500.0) for tr in ens]
        mean = float(np.mean([tr.values[i].mean() for tr, i in zip(ens, idxs)]))
        limit = ultimate_mean_bound(cfg.model) * 1.05
        return CheckResult(4, "ultimate mean bound", mean <= limit,
                           f"mean X = {mean:.4f} <= 1.05 * r M / gamma = {limit:.4f}",
                           time.perf_counter() - t0, runtime_limit=120.0)

    def check_5_ergodicity(self) -> CheckResult:
        t0 = time.perf_counter()
        window = MeasureWindow(250.0, 250.0)
        h_a = occupation_histogram(self.fig_ensemble("fig2_p6"), window, 200, (0.0, 2.0))
        h_b = occupation_histogram(self.fig_ensemble("fig3"), window, 200, (0.0, 2.0))
        d = measure_distance(h_a, h_b)
        return CheckResult(5, "ergodicity indication", d < 0.1,
                           f"L1(history 0.5 vs history 0) = {d:.4f} (< 0.1)",
                           time.perf_counter() - t0, runtime_limit=120.0)

    def check_6_support_away_from_zero(self) -> CheckResult:
        t0 = time.perf_counter()
        traj = self.fig1_trajectory()
        h = occupation_histogram(traj, MeasureWindow(5000.0, 5000.0), 200, (0.0, 2.0))
        lo, _ = h.support()
        return CheckResult(6, "bounded away from zero", lo > 0.05,
                           f"histogram support lower edge = {lo:.4f} (> 0.05)",
                           time.perf_counter() - t0)

    def check_7_mc_reverse_brownian(self) -> CheckResult:
        t0 = time.perf_counter()
        proc = SyntheticProcess(alpha=1.0, beta=1.0, noise=NoiseSpec(sigma=1.0))
        rep = mc_verify_tail_bound(proc, "reverse_sup", 20.0,
                                   lambda R: bound_reverse_sup_brownian(1.0, 1.0, R),
                                   R_grid=[450.0, 550.0, 650.0, 750.0],
                                   n_samples=10_000, dt=0.02, seed=701)
        return CheckResult(7, "MC reverse-sup (Brownian)", rep.passed,
                           rep.summary(), time.perf_counter() - t0,
                           runtime_limit=60.0)

    def check_8_mc_window_brownian(self) -> CheckResult:
        t0 = time.perf_counter()
        proc = SyntheticProcess(alpha=0.0, beta=1.0, noise=NoiseSpec(sigma=1.0))
        rep = mc_verify_tail_bound(proc, "window_sup", 1.0,
                                   lambda R: bound_window_sup_brownian(1.0, 1.0, R),
                                   R_grid=[2.0, 3.0, 4.0, 5.0],
                                   n_samples=10_000, dt=0.005, seed=801)
        return CheckResult(8, "MC window-sup (Brownian)", rep.passed,
                           rep.summary(), time.perf_counter() - t0,
                           runtime_limit=30.0)

    def check_9_mc_levy(self) -> CheckResult:
        t0 = time.perf_counter()
        noise = NoiseSpec(sigma=1.0, lambda_n=1.0, zeta=0.5, jump_law="uniform")
        params = TailBoundParams.from_noise(1.0, 1.0, noise, T=1.0, kappa2=1.0)
        proc = SyntheticProcess(alpha=1.0, beta=1.0, noise=noise)
        reps = [
            mc_verify_tail_bound(proc, "reverse_sup", 20.0,
                                 lambda R: bound_reverse_sup_levy(params, R),
                                 R_grid=[2000.0, 2500.0, 3000.0],
                                 n_samples=10_000, dt=0.02, seed=901),
            mc_verify_tail_bound(proc, "window_sup", 1.0,
                                 lambda R: bound_window_sup_levy(params, R),
                                 R_grid=[10.0, 12.0, 15.0],
                                 n_samples=10_000, dt=0.005, seed=902),
            mc_verify_tail_bound(proc, "reverse_sup", 20.0,
                                 lambda R: bound_composite(params, R),
                                 R_grid=[6000.0, 7500.0, 10000.0],
                                 n_samples=10_000, dt=0.02, seed=903),
        ]
        ok = all(r.passed for r in reps)
        detail = "; ".join(r.summary() for r in reps)
        return CheckResult(9, "MC Levy bounds", ok, detail,
                           time.perf_counter() - t0, runtime_limit=120.0)

    def check_10_pathwise(self) -> CheckResult:
        t0 = time.perf_counter()
        model = ModelSpec(gamma=1.0, r=2.0, tau=1.0, feedback=MackeyGlass(p=2, q=0),
                          b_coupling=1.0, drift_mode="explicit", a_explicit=0.0)
        noise = NoiseSpec(sigma=0.05, lambda_n=0.0)
        cfg = TrajectoryConfig(dt=5e-3, t_end=50.0, seed=1001, store_forcing=True)
        ens = simulate_ensemble(model, noise, 0.0, cfg, n_traj=100,
                                workers=self.workers)
        delta = lower_envelope_delta(1.0, 2.0, model.feedback)
        up = EstimateCheckParams.for_model(model, noise, R=2.0)
        low = EstimateCheckParams.for_model(model, noise, R=10.0, delta=delta)
        n_viol = 0
        for tr in ens:
            n_viol += check_pathwise_upper(tr, up).n_violations
            n_viol += check_pathwise_lower(tr, low).n_violations
        return CheckResult(10, "pathwise estimates", n_viol == 0,
                           f"{n_viol} violations over 100 noisy trajectories "
                           f"(upper R=2, lower R=10)",
                           time.perf_counter() - t0, runtime_limit=120.0)

    def check_11_stability(self) -> CheckResult:
        t0 = time.perf_counter()
        rng = np.random.default_rng(1101)
        worst_res, sign_ok = 0.0, True
        for _ in range(100):
            g = rng.uniform(0.2, 10.0)
            r = rng.uniform(0.2, 10.0)
            tau = rng.uniform(0.05, 3.0)
            roots = characteristic_roots(g, r, 1.0, tau)
            worst_res = max(worst_res,
                            max(residual(lam, g, r, 1.0, tau) for lam in roots))
            theta = r - g
            if abs(theta) > 1e-9 and np.sign(roots[0].real) != np.sign(theta):
                sign_ok = False
        tau0 = hopf_threshold(5.0, 10.0, 8.0)
        tau0_ok = abs(tau0 - 0.13510217177120799) < 1e-3
        crossing = hopf_crossing_tau(5.0, 10.0, 8.0)
        cross_ok = abs(crossing - tau0) < 1e-3
        gpc_ok = not any(global_periodic_condition(5.0, 10.0, p) for p in (4.0, 6.0, 8.0))
        ok = worst_res < 1e-10 and sign_ok and tau0_ok and cross_ok and gpc_ok
        detail = (f"max residual {worst_res:.2e}; sign(Re l0)=sign(theta): {sign_ok}; "
                  f"tau0={tau0:.6f} vs crossing {crossing:.6f}; "
                  f"periodic condition false for figures: {gpc_ok}")
        return CheckResult(11, "stability analysis", ok, detail,
                           time.perf_counter() - t0, runtime_limit=10.0)

    def check_12_noise_moments(self) -> CheckResult:
        t0 = time.perf_counter()
        specs = [NoiseSpec(sigma=1.0, lambda_n=0.0),
                 NoiseSpec(sigma=0.5, lambda_n=1.0, zeta=0.5, jump_law="uniform")]
        details, ok = [], True
        for j, spec in enumerate(specs):
            vals = np.empty(10_000)
            for k in range(vals.size):
                p = sample_noise_path((1201 + j, k), spec, 0.05, 20)
                vals[k] = p.cumulative_levy(spec.sigma)[-1]
            _, target, _ = levy_moments(spec, 1.0)
            m2 = float(((vals - vals.mean()) ** 2).mean())
            m4 = float(((vals - vals.mean()) ** 4).mean())
            se = math.sqrt(max(m4 - m2 * m2, 1e-30) / vals.size)
            good = abs(vals.var() - target) < 3.0 * se
            ok &= good
            details.append(f"Var L(1) = {vals.var():.4f} vs {target:.4f} "
                           f"(3 SE = {3 * se:.4f})")
        return CheckResult(12, "noise moments", ok, "; ".join(details),
                           time.perf_counter() - t0, runtime_limit=30.0)

    def check_13_determinism(self) -> CheckResult:
        t0 = time.perf_counter()
        outputs = {}
        for workers in (1, 8):
            with tempfile.TemporaryDirectory() as tmp:
                cli_runs.run_figures("fig1", tmp, workers=workers)
                outputs[workers] = {
                    name: open(os.path.join(tmp, name), "rb").read()
                    for name in sorted(os.listdir(tmp))
                }
        same = outputs[1] == outputs[8]
        names = sorted(outputs[1])
        return CheckResult(13, "determinism across workers", same,
                           f"byte-identical outputs for 1 vs 8 workers: {names}",
                           time.perf_counter() - t0)

    # -- driver -------------------------------------------------------------

    def run(self, only=None) -> list[CheckResult]:
        checks: list[Callable[[], CheckResult]] = [
            self.check_1_fixed_point, self.check_2_window_invariance,
            self.check_3_positivity, self.check_4_ultimate_mean,
            self.check_5_ergodicity, self.check_6_support_away_from_zero,
            self.check_7_mc_reverse_brownian, self.check_8_mc_window_brownian,
            self.check_9_mc_levy, self.check_10_pathwise,
            self.check_11_stability, self.check_12_noise_moments,
            self.check_13_determinism,
        ]
        results = []
        for i, chk in enumerate(checks, start=1):
            if only and i not in only:
                continue
            results.append(chk())
        return results


CRITERIA = list(range(1, 14))
