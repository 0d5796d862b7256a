"""Feedback functionals and model specification.

The feedback menu is a closed enumeration (Mackey-Glass, Nicholson) so
that the supremum bound M, the derivative at zero, and Lipschitz-ness
are all known analytically; every downstream bound consumes M and f'(0).
Simulation always runs in log coordinates, where x = e^y stays positive
by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "MackeyGlass",
    "Nicholson",
    "FeedbackFn",
    "Rate",
    "as_rate",
    "ClampedCoupling",
    "ModelSpec",
    "BlowDownError",
    "eval_feedback",
    "feedback_sup_bound",
    "feedback_derivative_at_zero",
    "coupling_drift",
    "transformed_drift",
    "DRIFT_MODES",
]

DRIFT_MODES = ("ito_coupled", "levy_coupled", "explicit")

# e^{-y} overflows double precision near y = -745; abort a step before
# the drift product degrades into inf (only -inf blow-downs can occur).
BLOW_DOWN_THRESHOLD = -700.0


class BlowDownError(RuntimeError):
    """State ran below the representable range (x -> 0+ in original space)."""

    def __init__(self, y: float, t: float):
        super().__init__(f"blow-down: y = {y:.6g} below {BLOW_DOWN_THRESHOLD} at t = {t:.6g}")
        self.y = y
        self.t = t


@dataclass(frozen=True)
class MackeyGlass:
    """f(x) = x^q / (1 + x^p) on [0, inf), p >= 1, q in {0, 1}."""

    p: float
    q: int = 1

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.q not in (0, 1):
            raise ValueError(f"q must be 0 or 1, got {self.q}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("feedback is only defined for x >= 0")
        out = (x if self.q == 1 else 1.0) / (1.0 + x ** self.p)
        return float(out) if out.ndim == 0 else out

    def value_at_log(self, y):
        """f(e^y), stable for y far outside the representable range of e^y."""
        y = np.asarray(y, dtype=float)
        py = self.p * y
        small = py < 700.0
        xy = np.exp(np.where(small, y, 0.0))
        direct = (xy if self.q == 1 else 1.0) / (1.0 + xy ** self.p)
        # for large y: x^q/(1+x^p) ~ e^{(q-p)y}
        tail = np.exp(np.minimum((self.q - self.p) * y, 0.0))
        out = np.where(small, direct, tail)
        return float(out) if out.ndim == 0 else out

    def sup_bound(self) -> float:
        if self.q == 0:
            return 1.0  # monotone decreasing, attained at x = 0
        if self.p == 1:
            return 1.0  # x/(1+x) increases to 1
        xm = self.argmax()
        return xm * (self.p - 1.0) / self.p

    def argmax(self) -> float:
        """Maximizer of f on [0, inf); stationarity gives x^p = 1/(p-1)."""
        if self.q == 0:
            return 0.0
        if self.p == 1:
            return math.inf
        return (1.0 / (self.p - 1.0)) ** (1.0 / self.p)

    def derivative_at_zero(self) -> float:
        if self.q == 1:
            return 1.0
        return -1.0 if self.p == 1 else 0.0


@dataclass(frozen=True)
class Nicholson:
    """f(x) = x * e^{-p x} on [0, inf), p > 0."""

    p: float

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError(f"p must be > 0, got {self.p}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("feedback is only defined for x >= 0")
        out = x * np.exp(-self.p * x)
        return float(out) if out.ndim == 0 else out

    def value_at_log(self, y):
        y = np.asarray(y, dtype=float)
        small = y < 700.0
        xy = np.exp(np.where(small, y, 0.0))
        out = np.where(small, xy * np.exp(-self.p * xy), 0.0)
        return float(out) if out.ndim == 0 else out

    def sup_bound(self) -> float:
        return 1.0 / (self.p * math.e)

    def argmax(self) -> float:
        return 1.0 / self.p

    def derivative_at_zero(self) -> float:
        return 1.0


FeedbackFn = Union[MackeyGlass, Nicholson]


def eval_feedback(f: FeedbackFn, x):
    """Evaluate f(x); x must be >= 0."""
    return f.value(x)


def feedback_sup_bound(f: FeedbackFn) -> float:
    """Least upper bound M of f on [0, inf)."""
    return f.sup_bound()


def feedback_derivative_at_zero(f: FeedbackFn) -> float:
    """Right derivative f'(0)."""
    return f.derivative_at_zero()


@dataclass(frozen=True)
class Rate:
    """Piecewise-constant cadlag rate: value(t) = values[i] on
    [breaks[i-1], breaks[i]) with breaks[-1] = +inf."""

    values: tuple[float, ...]
    breaks: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.breaks) != len(self.values) - 1:
            raise ValueError("need len(values) == len(breaks) + 1")
        if any(v < 0 for v in self.values):
            raise ValueError("rates must be non-negative")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    def value(self, t: float) -> float:
        i = 0
        for b in self.breaks:
            if t < b:
                break
            i += 1
        return self.values[i]

    def values_on(self, times: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.breaks), times, side="right")
        return np.asarray(self.values)[idx]

    @property
    def inf(self) -> float:
        return min(self.values)

    @property
    def sup(self) -> float:
        return max(self.values)

    @property
    def is_constant(self) -> bool:
        return len(self.values) == 1


def as_rate(r) -> Rate:
    if isinstance(r, Rate):
        return r
    return Rate(values=(float(r),))


@dataclass(frozen=True)
class ClampedCoupling:
    """State functional b(phi) = clamp(h(phi(0)), -bound, bound).

    h must be a module-level callable if the model is to cross process
    boundaries in parallel ensembles.
    """

    h: Callable[[float], float]
    bound: float

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("coupling bound must be >= 0")

    def value(self, y_now: float) -> float:
        return min(max(self.h(y_now), -self.bound), self.bound)


@dataclass(frozen=True)
class ModelSpec:
    """The full transformed equation:

    dY = [-gamma(t) + r(t) e^{-Y} f(e^{Y(t-tau)})] dt + a dt + b dL.

    ``b_coupling`` is either a constant or a ClampedCoupling; ``a`` is
    fixed by drift_mode ('ito_coupled' forces a = -b^2/2, 'levy_coupled'
    adds the jump correction, 'explicit' uses a_explicit).
    """

    gamma: Union[float, Rate]
    r: Union[float, Rate]
    tau: float
    feedback: FeedbackFn
    b_coupling: Union[float, ClampedCoupling] = 0.0
    drift_mode: str = "ito_coupled"
    a_explicit: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_rate(self.gamma))
        object.__setattr__(self, "r", as_rate(self.r))
        if self.gamma.inf <= 0:
            raise ValueError("gamma must be bounded away from zero")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.drift_mode not in DRIFT_MODES:
            raise ValueError(f"drift_mode must be one of {DRIFT_MODES}")

    @property
    def gamma_inf(self) -> float:
        return self.gamma.inf

    @property
    def r_sup(self) -> float:
        return self.r.sup

    @property
    def has_constant_b(self) -> bool:
        return not isinstance(self.b_coupling, ClampedCoupling)

    def b_value(self, y_now: float) -> float:
        if self.has_constant_b:
            return float(self.b_coupling)
        return self.b_coupling.value(y_now)

    def b_bound(self) -> float:
        """beta with b(phi)^2 <= beta^2 for all states."""
        if self.has_constant_b:
            return abs(float(self.b_coupling))
        return self.b_coupling.bound


def coupling_drift(b_value: float, noise, mode: str) -> float:
    """Drift a that makes the noise purely multiplicative in x-space:
    a = -b^2/2 for Brownian noise, plus b * integral of z over the unit
    ball of the Levy measure in the jump-driven case."""
    if mode == "ito_coupled":
        return -0.5 * b_value * b_value
    if mode == "levy_coupled":
        correction = noise.lambda_n * noise.unit_ball_jump_mean() if noise is not None else 0.0
        return -0.5 * b_value * b_value + b_value * correction
    raise ValueError("coupling_drift only serves coupled drift modes, not 'explicit'")


def drift_offset(model: ModelSpec, y_now: float, noise=None) -> float:
    """The artificial drift a at the current state, per drift_mode."""
    if model.drift_mode == "explicit":
        return model.a_explicit
    return coupling_drift(model.b_value(y_now), noise, model.drift_mode)


def transformed_drift(model: ModelSpec, y_now: float, y_delay: float, t: float,
                      noise=None) -> float:
    """-gamma(t) + r(t) e^{-y_now} f(e^{y_delay}) + a(...)."""
    if y_now < BLOW_DOWN_THRESHOLD:
        raise BlowDownError(y_now, t)
    base = -model.gamma.value(t) + model.r.value(t) * math.exp(-y_now) * model.feedback.value_at_log(y_delay)
    return base + drift_offset(model, y_now, noise)
