"""Deterministic structure: steady states, characteristic roots, and the
delay threshold where the positive equilibrium loses stability.

Characteristic roots of lambda + gamma = c * e^{-lambda*tau} come from
Lambert-W branch enumeration used purely as an initializer; every root is
then polished by Newton iteration on the residual itself and certified by
it, so no closed-form sign convention is ever trusted.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

from scipy.optimize import brentq

from .models import FeedbackFn, MackeyGlass, Nicholson

__all__ = [
    "lambert_w",
    "characteristic_roots",
    "steady_states",
    "hopf_threshold",
    "hopf_crossing_tau",
    "global_periodic_condition",
    "classify_regime",
    "StabilityReport",
    "stability_report",
]

_BRANCH_POINT = -1.0 / math.e
_W_TOL = 1e-13
_MAX_ITER = 100


class ConvergenceError(RuntimeError):
    pass


def _w_initial_guess(branch: int, z: complex) -> complex:
    if branch == 0:
        if abs(z) <= 0.7:
            # series around 0: W ~ z - z^2 + 1.5 z^3
            return z * (1.0 - z + 1.5 * z * z) if abs(z) > 1e-300 else z
        if abs(z - _BRANCH_POINT) < 0.3:
            p = cmath.sqrt(2.0 * (math.e * z + 1.0))
            return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        lz = cmath.log(z)
        return lz - cmath.log(lz)
    if branch == -1 and z.imag == 0 and _BRANCH_POINT < z.real < 0:
        if z.real > -0.1:
            lz = math.log(-z.real)
            return complex(lz - math.log(-lz))
        p = -cmath.sqrt(2.0 * (math.e * z + 1.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    lz = cmath.log(z) + 2.0j * math.pi * branch
    return lz - cmath.log(lz)


def lambert_w(branch: int, z: Union[float, complex]) -> Union[float, complex]:
    """The branch-m Lambert function: W with W * e^W = z.

    Real input on a real branch slice returns a float (principal branch
    needs z >= -1/e; branch -1 needs -1/e <= z < 0); anything else is
    solved and returned in the complex plane.  Halley iteration from the
    usual asymptotic guesses; residual |W e^W - z| is driven below 1e-12
    (relative for large z) or a ConvergenceError reports failure.
    """
    real_input = not isinstance(z, complex)
    if real_input:
        if branch == 0 and z < _BRANCH_POINT:
            raise ValueError(f"W_0 is complex for real z < -1/e (z = {z})")
        if branch == -1 and not (_BRANCH_POINT <= z < 0):
            raise ValueError(f"real W_-1 needs z in [-1/e, 0), got {z}")
    zc = complex(z)
    if zc == 0:
        if branch == 0:
            return 0.0 if real_input else 0.0 + 0.0j
        raise ValueError(f"W_{branch}(0) diverges")
    # exact branch point
    if abs(zc - _BRANCH_POINT) < 1e-300 and branch in (0, -1):
        return -1.0 if real_input else complex(-1.0)

    w = _w_initial_guess(branch, zc)
    tol = _W_TOL * max(1.0, abs(zc))
    for _ in range(_MAX_ITER):
        ew = cmath.exp(w)
        f = w * ew - zc
        if abs(f) < tol:
            break
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) < 1e-16 * (1.0 + abs(w)):
            break
    else:
        raise ConvergenceError(f"W_{branch}({z}) did not converge in {_MAX_ITER} iterations")
    if abs(w * cmath.exp(w) - zc) > 100 * tol:
        raise ConvergenceError(f"W_{branch}({z}) residual too large")
    if real_input and branch in (0, -1) and abs(w.imag) < 1e-14:
        return w.real
    return w


def characteristic_roots(gamma: float, r: float, fprime0: float, tau: float,
                         n_roots: int = 7) -> list[complex]:
    """Leading roots of lambda + gamma = r f'(0) e^{-lambda tau}.

    Substituting w = tau(lambda + gamma) turns the equation into
    w e^w = tau * r f'(0) * e^{gamma tau}, one root per Lambert branch;
    each candidate is Newton-polished on the residual (certified below
    1e-10) and the list is sorted by descending real part.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    c = r * fprime0
    if c == 0.0:
        return [complex(-gamma)]
    arg = complex(tau * c * math.exp(gamma * tau))

    roots: list[complex] = []
    branches = [0]
    k = 1
    while len(branches) < max(n_roots + 2, 6):
        branches += [k, -k]
        k += 1
    for m in branches:
        try:
            w = lambert_w(m, arg)
        except (ValueError, ConvergenceError):
            continue
        lam = complex(w) / tau - gamma
        lam = _newton_polish(lam, gamma, c, tau)
        if lam is not None and not any(abs(lam - s) < 1e-8 for s in roots):
            roots.append(lam)
    roots.sort(key=lambda s: (-s.real, abs(s.imag)))
    return roots[:n_roots]


def _newton_polish(lam: complex, gamma: float, c: float, tau: float) -> Optional[complex]:
    for _ in range(60):
        e = cmath.exp(-lam * tau)
        g = lam + gamma - c * e
        if abs(g) < 1e-13 * max(1.0, abs(lam)):
            break
        gp = 1.0 + tau * c * e
        if gp == 0:
            return None
        lam = lam - g / gp
    g = lam + gamma - c * cmath.exp(-lam * tau)
    if abs(g) > 1e-10:
        return None
    if abs(lam.imag) < 1e-12:
        lam = complex(lam.real)
    return lam


def residual(lam: complex, gamma: float, r: float, fprime0: float, tau: float) -> float:
    """|lambda + gamma - r f'(0) e^{-lambda tau}|, the root certificate."""
    return abs(lam + gamma - r * fprime0 * cmath.exp(-lam * tau))


def steady_states(gamma: float, r: float, f: FeedbackFn) -> list[float]:
    """Non-negative equilibria of x' = -gamma x + r f(x(t - tau)).

    Zero belongs whenever f(0) = 0; the positive root is closed-form for
    Mackey-Glass q=1 and Nicholson, and bracketed numerically for the
    monotone family.  Every root satisfies |  -gamma x + r f(x)| < 1e-10.
    """
    if gamma <= 0 or r <= 0:
        raise ValueError("gamma and r must be positive constants")
    roots: list[float] = []
    if isinstance(f, MackeyGlass) and f.q == 1:
        roots.append(0.0)
        if r > gamma:
            roots.append(((r - gamma) / gamma) ** (1.0 / f.p))
    elif isinstance(f, Nicholson):
        roots.append(0.0)
        if r > gamma:
            roots.append(math.log(r / gamma) / f.p)
    else:
        # monotone Mackey-Glass (q = 0): gamma*x*(1 + x^p) = r has a
        # unique positive solution since the left side increases from 0
        hi = r / gamma + 1.0
        roots.append(brentq(lambda x: gamma * x - r * f.value(x), 0.0, hi,
                            xtol=1e-14, rtol=8.9e-16))
    for x in roots:
        if abs(-gamma * x + r * f.value(x)) >= 1e-10:
            raise AssertionError(f"steady-state residual check failed at x = {x}")
    return roots


def hopf_threshold(gamma: float, r: float, p: float) -> Optional[float]:
    """Delay at which x_* loses stability, for the Mackey-Glass q=1 family.

    Defined only when r > gamma and gamma/r < (p-2)/p; returns None
    otherwise (the equilibrium is stable for every delay, or absent).
    """
    if not (gamma > 0 and r > 0 and p > 0):
        raise ValueError("gamma, r, p must be positive")
    if r <= gamma or gamma * p >= (p - 2.0) * r:
        return None
    den = p * gamma - (p - 1.0) * r
    radicand = den * den - r * r
    if radicand <= 0 or abs(r / den) > 1.0:
        raise ValueError(
            f"threshold formula out of domain: den={den}, radicand={radicand}")
    return r / (gamma * math.sqrt(radicand)) * math.acos(r / den)


def _mg_fprime(p: float, x: float) -> float:
    xp = x ** p
    return (1.0 + (1.0 - p) * xp) / (1.0 + xp) ** 2


def hopf_crossing_tau(gamma: float, r: float, p: float,
                      bracket_factor: float = 4.0) -> float:
    """Zero crossing of Re(leading root) at the x_* linearization.

    Independent cross-check of the closed-form threshold: the
    linearization about x_* has coefficient r f'(x_*), and the leading
    root's real part is bisected in tau.
    """
    x_star = ((r - gamma) / gamma) ** (1.0 / p)
    coeff = _mg_fprime(p, x_star)

    def re_lead(tau):
        return characteristic_roots(gamma, r, coeff, tau, n_roots=3)[0].real

    tau0 = hopf_threshold(gamma, r, p)
    lo, hi = tau0 / bracket_factor, tau0 * bracket_factor
    if re_lead(lo) >= 0 or re_lead(hi) <= 0:
        raise ValueError("failed to bracket the stability crossing")
    return brentq(re_lead, lo, hi, xtol=1e-12)


def global_periodic_condition(gamma: float, r: float, p: float) -> bool:
    """Sufficient condition for a global periodic orbit:
    max{1, (p-1)^2/(4p)} < sqrt(2) * gamma / r."""
    if gamma <= 0 or r <= 0 or p <= 0:
        raise ValueError("gamma, r, p must be positive")
    return max(1.0, (p - 1.0) ** 2 / (4.0 * p)) < math.sqrt(2.0) * gamma / r


def classify_regime(gamma: float, r: float, p: float, tau: float) -> str:
    """Stability regime of the positive equilibrium (Mackey-Glass q=1).

    '(i)': asymptotically stable for every delay; '(ii)-stable' /
    '(ii)-unstable': by tau against the threshold; boundaries are
    reported as 'boundary', never guessed.
    """
    if r <= gamma:
        return "no-positive-steady-state"
    if gamma * p == (p - 2.0) * r:
        return "boundary"
    if gamma * p > (p - 2.0) * r:
        return "(i)"
    tau0 = hopf_threshold(gamma, r, p)
    if tau == tau0:
        return "boundary"
    return "(ii)-stable" if tau < tau0 else "(ii)-unstable"


@dataclass(frozen=True)
class StabilityReport:
    """Everything the `stability` command prints for one parameter set."""

    gamma: float
    r: float
    tau: float
    feedback: FeedbackFn
    equilibria: tuple[float, ...]
    x_star: Optional[float]
    theta: float
    lambda_0: complex
    tau_0: Optional[float]
    regime: Optional[str]
    global_periodic_condition: Optional[bool]

    def lines(self) -> list[str]:
        out = [
            f"gamma = {self.gamma}, r = {self.r}, tau = {self.tau}",
            f"feedback = {self.feedback}",
            f"equilibria = {', '.join(f'{x:.12g}' for x in self.equilibria)}",
            f"x_star = {self.x_star if self.x_star is not None else 'absent'}",
            f"theta = r f'(0) - gamma = {self.theta:.12g}",
            f"lambda_0 = {self.lambda_0:.12g} (zero state {'unstable' if self.lambda_0.real > 0 else 'stable'})",
            f"tau_0 = {self.tau_0 if self.tau_0 is not None else 'absent'}",
            f"regime = {self.regime if self.regime is not None else 'n/a'}",
            f"global_periodic_condition = {self.global_periodic_condition}",
        ]
        return out


def stability_report(gamma: float, r: float, feedback: FeedbackFn,
                     tau: float) -> StabilityReport:
    """Assemble the deterministic stability picture for constant rates."""
    eq = steady_states(gamma, r, feedback)
    positive = [x for x in eq if x > 0]
    x_star = max(positive) if positive else None
    theta = r * feedback.derivative_at_zero() - gamma
    lam0 = characteristic_roots(gamma, r, feedback.derivative_at_zero(), tau)[0]
    mg_unimodal = isinstance(feedback, MackeyGlass) and feedback.q == 1
    tau_0 = hopf_threshold(gamma, r, feedback.p) if mg_unimodal else None
    regime = classify_regime(gamma, r, feedback.p, tau) if mg_unimodal else None
    gpc = global_periodic_condition(gamma, r, feedback.p) if mg_unimodal else None
    return StabilityReport(gamma=gamma, r=r, tau=tau, feedback=feedback,
                           equilibria=tuple(eq), x_star=x_star, theta=theta,
                           lambda_0=lam0, tau_0=tau_0, regime=regime,
                           global_periodic_condition=gpc)
