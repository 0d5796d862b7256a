"""Tail bounds for noise-driven processes with negative drift, their
Monte-Carlo verification, and pathwise solution-estimate checkers.

Evaluators implement the bounds' printed right-hand sides verbatim; the
free constant kappa_1 is chosen as large as the admissibility condition
allows (bisection on a monotone function), since a larger kappa_1 only
tightens the exp(-kappa_1 R) term.  All bound evaluators are
non-increasing in R and vanish as R grows, apart from the explicit
indicator term of the window bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .models import ModelSpec
from .noise import NoiseSpec, sample_jump_sizes
from .solver import Trajectory

__all__ = [
    "TailBoundParams",
    "BoundCurve",
    "bound_reverse_sup_brownian",
    "bound_window_sup_brownian",
    "solve_kappa1",
    "bound_reverse_sup_levy",
    "bound_window_sup_levy",
    "bound_composite",
    "bound_curve",
    "ultimate_mean_bound",
    "SyntheticProcess",
    "VerificationReport",
    "mc_verify_tail_bound",
    "EstimateCheckParams",
    "PathwiseReport",
    "check_pathwise_upper",
    "check_pathwise_lower",
    "lower_envelope_delta",
]


@dataclass(frozen=True)
class TailBoundParams:
    """Constants entering the closed-form bounds.

    alpha: lower bound on the drift integrand; beta: bound with
    b(s)^2 <= beta^2; sigma, lambda_n, zeta, mean_jump: the driving
    noise; T: window length; horizon_l: reverse-sup horizon; kappa2: the
    free exponent of the window bound; q_split: how much drift the jump
    part of the splitting keeps (q -> 1 admits alpha down to
    lambda_n * zeta * beta).
    """

    alpha: float
    beta: float
    sigma: float = 1.0
    lambda_n: float = 0.0
    zeta: float = 0.0
    mean_jump: float = 0.0
    T: float = 1.0
    horizon_l: int = 20
    kappa2: float = 1.0
    q_split: float = 0.99
    martingale: bool = True

    def __post_init__(self):
        for name in ("beta", "T", "kappa2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 < self.q_split < 1.0:
            raise ValueError("q_split must lie in (0, 1)")
        if min(self.sigma, self.lambda_n, self.zeta) < 0:
            raise ValueError("sigma, lambda_n, zeta must be >= 0")

    @classmethod
    def from_noise(cls, alpha: float, beta: float, noise: NoiseSpec, **kw) -> "TailBoundParams":
        return cls(alpha=alpha, beta=beta, sigma=noise.sigma, lambda_n=noise.lambda_n,
                   zeta=noise.zeta, mean_jump=noise.jump_mean(),
                   martingale=noise.is_martingale(), **kw)

    def jump_activity(self) -> float:
        return self.lambda_n * self.zeta * self.beta


@dataclass(frozen=True)
class BoundCurve:
    """A bound evaluated on an R grid, with the per-term breakdown.

    Values above 1 are vacuous; they are reported as-is, never clipped.
    """

    R_grid: np.ndarray
    values: np.ndarray
    components: tuple[np.ndarray, ...]
    label: str = ""

    def to_csv(self, file, header: Optional[str] = None) -> None:
        cols = ",".join(["R", "bound"]
                        + [f"term_{i + 1}" for i in range(len(self.components))])
        _write_rows(file, header, cols,
                    (tuple([r, v] + [c[i] for c in self.components])
                     for i, (r, v) in enumerate(zip(self.R_grid, self.values))))


def bound_reverse_sup_brownian(alpha: float, beta: float, R: float) -> float:
    """Tail of the reverse-time supremum of an Ito process with drift
    <= -alpha and |b| <= beta, uniform in the horizon length:

        4 exp(-R^2/(64 b^2)) + 4 exp(-a R/(64 b^2)) / (1 - exp(-a^2/(128 b^2)))
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("the estimate needs strictly positive alpha and beta")
    b2 = beta * beta
    gauss = 4.0 * math.exp(-R * R / (64.0 * b2))
    geom = 4.0 * math.exp(-alpha * R / (64.0 * b2)) / (
        1.0 - math.exp(-alpha * alpha / (128.0 * b2)))
    return gauss + geom


def bound_window_sup_brownian(beta: float, T: float, R: float) -> float:
    """Gaussian tail of the sup over a length-T window: 2 exp(-R^2/(16 b^2 T))."""
    if beta <= 0 or T <= 0:
        raise ValueError("beta and T must be > 0")
    return 2.0 * math.exp(-R * R / (16.0 * beta * beta * T))


def _kappa1_fn(kappa: float, lambda_n: float, zb: float, q: float) -> float:
    return lambda_n / kappa * math.expm1(kappa * zb / q)


def solve_kappa1(alpha: float, lambda_n: float, zeta: float, beta: float,
                 q: float = 0.99) -> Optional[float]:
    """Largest kappa_1 with (lambda_n/kappa)(e^{kappa zeta beta / q} - 1) <= alpha.

    q = 1/2 recovers the symmetric splitting, whose admissibility
    condition is alpha > 2 lambda_n zeta beta; pushing q toward 1 relaxes
    it to alpha > lambda_n zeta beta.  The function increases from
    lambda_n*zeta*beta/q at 0+, so a root exists iff alpha exceeds that
    limit; bisection to 1e-10.  Returns None when lambda_n*zeta*beta == 0
    (no jump component; the exp(-kappa_1 R) term is dropped entirely).
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    zb = zeta * beta
    if lambda_n * zb == 0.0:
        return None
    limit = lambda_n * zb / q
    if alpha <= limit:
        raise ValueError(
            f"need alpha > lambda_n*zeta*beta/q = {limit} (relaxed drift condition); "
            f"got alpha = {alpha}")
    lo = 1e-300
    hi = 1.0
    while _kappa1_fn(hi, lambda_n, zb, q) < alpha:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("kappa_1 bracketing failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _kappa1_fn(mid, lambda_n, zb, q) <= alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10 * max(1.0, lo):
            break
    return lo


def bound_reverse_sup_levy(params: TailBoundParams, R: float,
                           with_terms: bool = False):
    """Reverse-sup tail under regulated Levy noise:

        4 exp(-R^2/(256 b^2 s^2)) + 4 exp(-a R/(256 b^2 s^2))
          / (1 - exp(-a^2/(512 b^2 s^2))) + exp(-kappa_1 R)

    With sigma = 0 the continuous part vanishes identically, so the two
    Brownian terms contribute 0 for R > 0 (the analytic limit, not a
    division by zero).
    """
    a, b, s = params.alpha, params.beta, params.sigma
    if a <= params.jump_activity() / params.q_split:
        raise ValueError(
            f"need alpha > lambda_n*zeta*beta/q = {params.jump_activity() / params.q_split} "
            f"(relaxed drift condition); got alpha = {a}")
    if a <= 0:
        raise ValueError("alpha must be > 0")
    if s > 0:
        b2s2 = b * b * s * s
        gauss = 4.0 * math.exp(-R * R / (256.0 * b2s2))
        geom = 4.0 * math.exp(-a * R / (256.0 * b2s2)) / (
            1.0 - math.exp(-a * a / (512.0 * b2s2)))
    else:
        gauss = 0.0 if R > 0 else 4.0
        geom = 0.0 if R > 0 else math.inf
    kap = solve_kappa1(a, params.lambda_n, params.zeta, b, params.q_split)
    jump = math.exp(-kap * R) if kap is not None else 0.0
    total = gauss + geom + jump
    if with_terms:
        return total, (gauss, geom, jump)
    return total


def window_levy_r0(params: TailBoundParams) -> float:
    """Threshold below which the window bound is vacuous.

    Zero for martingale noise; otherwise 4*lambda_n*|E Z1|*beta*T, which
    makes R/4 dominate the compensator drift lambda_n |E Z1| beta T.
    """
    if params.martingale or params.lambda_n == 0.0:
        return 0.0
    return 4.0 * params.lambda_n * abs(params.mean_jump) * params.beta * params.T


def bound_window_sup_levy(params: TailBoundParams, R: float,
                          with_terms: bool = False):
    """Window-sup tail under regulated Levy noise:

        2 exp(-R^2/(64 b^2 s^2 T)) + C exp(-kappa_2 R) + 1_{R < R_0},

    with C = exp(4 k2 lam zeta b T) * exp(lam T (e^{4 k2 zeta b} - 1)),
    independent of R and of the window position.
    """
    b, s, T, k2 = params.beta, params.sigma, params.T, params.kappa2
    lam, z = params.lambda_n, params.zeta
    if s > 0:
        gauss = 2.0 * math.exp(-R * R / (64.0 * b * b * s * s * T))
    else:
        gauss = 0.0 if R > 0 else 2.0
    C = math.exp(4.0 * k2 * lam * z * b * T) * math.exp(lam * T * math.expm1(4.0 * k2 * z * b))
    expo = C * math.exp(-k2 * R)
    indicator = 1.0 if R < window_levy_r0(params) else 0.0
    total = gauss + expo + indicator
    if with_terms:
        return total, (gauss, expo, indicator)
    return total


def bound_composite(params: TailBoundParams, R: float,
                    with_terms: bool = False):
    """Boundedness-in-probability composite: the reverse-sup bound at R/3
    plus two unit-window bounds at R/3 (the same split as the proof that
    the reverse supremum over an arbitrary horizon is controlled)."""
    window_params = params if params.T == 1.0 else _replace_T(params, 1.0)
    rev = bound_reverse_sup_levy(params, R / 3.0)
    win = bound_window_sup_levy(window_params, R / 3.0)
    total = rev + 2.0 * win
    if with_terms:
        return total, (rev, win, win)
    return total


def _replace_T(params: TailBoundParams, T: float) -> TailBoundParams:
    kw = {f: getattr(params, f) for f in params.__dataclass_fields__}
    kw["T"] = T
    return TailBoundParams(**kw)


def bound_curve(bound_fn: Callable[[float], float], R_grid: Sequence[float],
                label: str = "") -> BoundCurve:
    """Evaluate a bound (with per-term breakdown when available) on a grid."""
    values, comps = [], []
    for R in R_grid:
        try:
            v, terms = bound_fn(R, with_terms=True)
        except TypeError:
            v, terms = bound_fn(R), ()
        values.append(v)
        comps.append(terms)
    n_terms = len(comps[0]) if comps else 0
    components = tuple(np.array([c[i] for c in comps]) for i in range(n_terms))
    return BoundCurve(R_grid=np.asarray(R_grid, dtype=float),
                      values=np.asarray(values), components=components, label=label)


def ultimate_mean_bound(model: ModelSpec) -> float:
    """limsup of E[X(t)] is at most r_sup * M / gamma_inf."""
    return model.r_sup * model.feedback.sup_bound() / model.gamma_inf


# ---------------------------------------------------------------------------
# Monte-Carlo verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticProcess:
    """Y(t) = -alpha t + beta L(t): the canonical negative-drift test bed."""

    alpha: float
    beta: float
    noise: NoiseSpec


@dataclass(frozen=True)
class VerificationReport:
    statistic: str
    R_grid: np.ndarray
    bound: np.ndarray
    empirical: np.ndarray
    upper_cl: np.ndarray
    informative: np.ndarray  # bound < 1
    resolvable: np.ndarray   # bound at or above the zero-hit confidence floor
    passed: bool
    n_samples: int
    confidence: float
    advisory: Optional[str] = None

    def to_csv(self, file, header: Optional[str] = None) -> None:
        decided = self.informative & self.resolvable
        _write_rows(file, header, "R,empirical,upper_cl,bound,pass",
                    ((r, e, u, b, float(ok)) for r, e, u, b, ok in
                     zip(self.R_grid, self.empirical, self.upper_cl, self.bound,
                         (self.upper_cl <= self.bound) | ~decided)))

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        decided = self.informative & self.resolvable
        ratios = self.upper_cl[decided] / np.maximum(self.bound[decided], 1e-300)
        worst = float(ratios.max()) if ratios.size else math.nan
        note = f" [{self.advisory}]" if self.advisory else ""
        return (f"{status} {self.statistic}: n={self.n_samples}, "
                f"{int(decided.sum())}/{len(self.R_grid)} decidable R, "
                f"max CL/bound = {worst:.3g}{note}")


def _clopper_pearson_upper(k: np.ndarray, n: int, confidence: float) -> np.ndarray:
    out = np.where(k >= n, 1.0, beta_dist.ppf(confidence, k + 1, np.maximum(n - k, 1)))
    return np.asarray(out, dtype=float)


def _simulate_statistics(process: SyntheticProcess, statistic: str, horizon: float,
                         n_samples: int, dt: float, seed) -> np.ndarray:
    """Sampled sup statistics; grid values are exact in distribution, jumps
    enter at their exact times, so the discrete sup can only understate the
    continuum one (the conservative direction for a one-sided check)."""
    spec = process.noise
    n_steps = int(round(horizon / dt))
    rng = np.random.default_rng(seed)
    out = np.empty(n_samples)
    batch = max(1, min(n_samples, int(2e6 // max(n_steps, 1))))
    drift = -process.alpha * dt if statistic == "reverse_sup" else 0.0
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        inc = process.beta * spec.sigma * rng.normal(0.0, math.sqrt(dt), (nb, n_steps))
        if drift:
            inc += drift
        if spec.lambda_n > 0:
            counts = rng.poisson(spec.lambda_n * horizon, nb)
            tot = int(counts.sum())
            if tot:
                cells = (rng.random(tot) * n_steps).astype(np.int64)
                sizes = process.beta * sample_jump_sizes(rng, spec, tot)
                rows = np.repeat(np.arange(nb), counts)
                np.add.at(inc, (rows, cells), sizes)
        y = np.cumsum(inc, axis=1)
        if statistic == "reverse_sup":
            out[done:done + nb] = y[:, -1] - np.minimum(y.min(axis=1), 0.0)
        elif statistic == "window_sup":
            out[done:done + nb] = np.maximum(y.max(axis=1), 0.0)
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
        done += nb
    return out


def mc_verify_tail_bound(process: SyntheticProcess, statistic: str, horizon: float,
                         bound_fn: Callable[[float], float], R_grid: Sequence[float],
                         n_samples: int = 10_000, confidence: float = 0.99,
                         dt: float = 0.01, seed=12345) -> VerificationReport:
    """Check empirically that the tail of the chosen sup statistic stays
    below the closed-form bound.

    PASS iff the one-sided upper confidence limit of the empirical tail
    frequency lies below bound(R) at every R where the bound is
    informative (bound < 1) and resolvable with n_samples.  Grid points
    whose bound sits below the zero-hit confidence floor cannot pass at
    any true tail value, so they raise an advisory instead of failing.
    """
    stats = _simulate_statistics(process, statistic, horizon, n_samples, dt, seed)
    R_grid = np.asarray(R_grid, dtype=float)
    bound = np.array([float(np.atleast_1d(bound_fn(R))[0]) for R in R_grid])
    hits = np.array([(stats >= R).sum() for R in R_grid])
    emp = hits / n_samples
    ucl = _clopper_pearson_upper(hits, n_samples, confidence)
    informative = bound < 1.0
    floor = 1.0 - (1.0 - confidence) ** (1.0 / n_samples)  # CL with zero hits
    resolvable = bound >= floor
    decided = informative & resolvable
    passed = bool(np.all(ucl[decided] <= bound[decided])) if decided.any() else True
    advisory = None
    if np.any(informative & ~resolvable):
        advisory = (f"bound drops below the zero-hit confidence floor {floor:.2e}; "
                    f"increase n_samples to resolve those R")
    return VerificationReport(statistic=statistic, R_grid=R_grid, bound=bound,
                              empirical=emp, upper_cl=ucl, informative=informative,
                              resolvable=resolvable, passed=passed,
                              n_samples=n_samples, confidence=confidence,
                              advisory=advisory)


# ---------------------------------------------------------------------------
# Pathwise estimate checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateCheckParams:
    """Constants of the pathwise upper/lower solution estimates."""

    R: float
    gamma_tilde: float = 0.0
    gamma_sup: float = 0.0
    r_tilde: float = 0.0
    M: float = 0.0
    zeta_eff: float = 0.0       # max jump of the forcing path (= beta * zeta)
    C_F: float = 0.0
    delta: float = math.inf     # lower check needs e^{-R} < delta
    beta_drift: float = 0.0     # the constant drift subtracted in the lower form

    @classmethod
    def for_model(cls, model: ModelSpec, noise: NoiseSpec, R: float,
                  delta: float = math.inf) -> "EstimateCheckParams":
        return cls(R=R, gamma_tilde=model.gamma_inf, gamma_sup=model.gamma.sup,
                   r_tilde=model.r_sup, M=model.feedback.sup_bound(),
                   zeta_eff=model.b_bound() * noise.zeta, C_F=0.0, delta=delta,
                   beta_drift=model.gamma.sup)


@dataclass(frozen=True)
class PathwiseReport:
    n_checked: int
    n_violations: int
    max_excess: float
    tolerance: float
    alpha: float
    # largest entry overshoot at a crossing of the level: one jump plus a
    # single grid step past R (upper) or -R (lower)
    max_overshoot: float
    violations: tuple[tuple[float, float, float], ...]  # (t, z, rhs), capped

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def _forcing_of(traj: Trajectory, forcing) -> np.ndarray:
    v = forcing if forcing is not None else traj.forcing
    if v is None:
        raise ValueError("trajectory carries no forcing path; "
                         "simulate with store_forcing=True or pass one")
    v = np.asarray(v, dtype=float)
    if v.shape != traj.values.shape:
        raise ValueError("forcing must be sampled on the trajectory grid")
    return v


def _grid_tolerance(traj: Trajectory, params: EstimateCheckParams, z: np.ndarray) -> float:
    # the grid a^t can trail the continuum one by up to dt, so allow
    # 2 * (local drift bound) * dt on the comparison
    lip = params.gamma_sup + params.r_tilde * params.M * math.exp(-float(z.min()))
    return 2.0 * lip * traj.dt + 1e-9


def check_pathwise_upper(traj: Trajectory, params: EstimateCheckParams,
                         forcing=None, max_reported: int = 20) -> PathwiseReport:
    """Check z(t) <= max{R, R + zeta - alpha (t - a^t) + v(t) - v(a^t)}
    with a^t the last time below R and alpha = gamma_tilde - r_tilde M e^{-R}.

    The inequality is a theorem; any violation beyond the grid tolerance
    indicates an implementation bug.
    """
    if traj.space != "transformed":
        raise ValueError("pathwise checks run on transformed-space trajectories")
    v = _forcing_of(traj, forcing)
    z = traj.values
    start = int(traj.window_indices(0.0, 0.0)[0])
    R = params.R
    if not z[start] < R:
        raise ValueError(f"need z(t0) = {z[start]} < R = {R}")
    alpha = params.gamma_tilde - params.r_tilde * params.M * math.exp(-R)
    tol = _grid_tolerance(traj, params, z)
    idx = np.arange(len(z))
    below = z < R
    last_below = np.maximum.accumulate(np.where(below, idx, -1))
    check = np.nonzero(~below & (idx >= start))[0]
    t = traj.times
    viols = []
    max_excess = 0.0
    overshoot = 0.0
    for k in check:
        a = last_below[k]
        rhs = max(R, R + params.zeta_eff - alpha * (t[k] - t[a]) + v[k] - v[a])
        excess = z[k] - rhs
        if excess > max_excess:
            max_excess = excess
        if excess > tol:
            viols.append((float(t[k]), float(z[k]), float(rhs)))
        if a == k - 1 and z[k] - R > overshoot:  # entry value at a crossing
            overshoot = z[k] - R
    return PathwiseReport(n_checked=len(z) - start, n_violations=len(viols),
                          max_excess=float(max_excess), tolerance=tol, alpha=alpha,
                          max_overshoot=float(overshoot),
                          violations=tuple(viols[:max_reported]))


def check_pathwise_lower(traj: Trajectory, params: EstimateCheckParams,
                         forcing=None, max_reported: int = 20) -> PathwiseReport:
    """Check z(t) >= min{-R, -R - C_F - beta - zeta + v(t) - v(a^t)} with
    a^t the last time above -R; requires e^{-R} < delta and z(t0) > -R.

    For the negative-feedback equation with f(0) > 0 the drift constant
    beta is the mortality rate and C_F = 0.
    """
    if traj.space != "transformed":
        raise ValueError("pathwise checks run on transformed-space trajectories")
    v = _forcing_of(traj, forcing)
    z = traj.values
    start = int(traj.window_indices(0.0, 0.0)[0])
    R = params.R
    if not math.exp(-R) < params.delta:
        raise ValueError(f"need e^-R = {math.exp(-R):.3g} < delta = {params.delta}")
    if not z[start] > -R:
        raise ValueError(f"need z(t0) = {z[start]} > -R = {-R}")
    tol = _grid_tolerance(traj, params, z)
    drop = params.C_F + params.beta_drift + params.zeta_eff
    idx = np.arange(len(z))
    above = z > -R
    last_above = np.maximum.accumulate(np.where(above, idx, -1))
    check = np.nonzero(~above & (idx >= start))[0]
    t = traj.times
    viols = []
    max_excess = 0.0
    overshoot = 0.0
    for k in check:
        a = last_above[k]
        rhs = min(-R, -R - drop + v[k] - v[a])
        excess = rhs - z[k]
        if excess > max_excess:
            max_excess = excess
        if excess > tol:
            viols.append((float(t[k]), float(z[k]), float(rhs)))
        if a == k - 1 and -R - z[k] > overshoot:
            overshoot = -R - z[k]
    return PathwiseReport(n_checked=len(z) - start, n_violations=len(viols),
                          max_excess=float(max_excess), tolerance=tol, alpha=math.nan,
                          max_overshoot=float(overshoot),
                          violations=tuple(viols[:max_reported]))


def lower_envelope_delta(gamma: float, r: float, feedback) -> float:
    """Largest delta with r f(x)/y >= gamma for all x, y in (0, delta).

    Needs f(0) > 0 (monotone Mackey-Glass); solves r f(delta) = gamma*delta
    by bisection, using that f decreases while the right side increases.
    """
    f0 = feedback.value(0.0)
    if f0 <= 0.0:
        raise ValueError("the lower estimate needs a family with f(0) > 0")
    lo, hi = 0.0, 1.0
    while r * feedback.value(hi) > gamma * hi:
        hi *= 2.0
        if hi > 1e12:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if r * feedback.value(mid) > gamma * mid:
            lo = mid
        else:
            hi = mid
    return lo


def _write_rows(file, header, columns, rows) -> None:
    close = isinstance(file, str)
    fh = open(file, "w") if close else file
    try:
        if header:
            fh.write(f"# {header}\n")
        fh.write(columns + "\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    finally:
        if close:
            fh.close()
