"""Brownian and regulated Levy jump-diffusion noise.

A regulated Levy process here is a square-integrable, finite-intensity
process ``L(t) = sigma*W(t) + Z(t)`` where ``W`` is a standard Brownian
motion and ``Z`` a compound Poisson process whose jump sizes are almost
surely bounded by ``zeta``.  Generators are pure functions of
``(seed, spec, grid)``; re-running with the same arguments reproduces the
path bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

__all__ = [
    "JUMP_LAWS",
    "NoiseSpec",
    "JumpEvent",
    "NoisePath",
    "sample_brownian_increments",
    "sample_jump_sizes",
    "sample_jump_events",
    "sample_noise_path",
    "levy_moments",
    "classify_noise",
]

JUMP_LAWS = ("uniform", "two_point", "truncated_gaussian")

# Truncated-Gaussian law: a standard normal conditioned on [-CUT, CUT],
# rescaled by zeta/CUT so the support is exactly [-zeta, zeta].
_TRUNC_CUT = 3.0


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of the driving noise ``L = sigma*W + Z``.

    ``sigma`` scales the Brownian part, ``lambda_n`` is the Poisson jump
    intensity, and jump sizes follow ``jump_law`` supported in
    ``[-zeta, zeta]``.  ``up_weight`` is the probability of a ``+zeta``
    jump for the two-point law (0.5 = symmetric).  ``centered`` asserts
    the jump law has mean zero (martingale case); it defaults to the
    analytic truth for the chosen law.
    """

    sigma: float = 1.0
    lambda_n: float = 0.0
    zeta: float = 0.0
    jump_law: str = "uniform"
    up_weight: float = 0.5
    centered: bool | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.lambda_n < 0:
            raise ValueError(f"lambda_n must be >= 0, got {self.lambda_n}")
        if self.zeta < 0:
            raise ValueError(f"zeta must be >= 0, got {self.zeta}")
        if self.jump_law not in JUMP_LAWS:
            raise ValueError(f"unknown jump_law {self.jump_law!r}; choose from {JUMP_LAWS}")
        if not 0.0 <= self.up_weight <= 1.0:
            raise ValueError(f"up_weight must lie in [0, 1], got {self.up_weight}")
        mean_zero = self.jump_mean() == 0.0
        if self.centered is None:
            object.__setattr__(self, "centered", mean_zero)
        elif self.centered and not mean_zero:
            raise ValueError(
                f"centered=True but the {self.jump_law!r} law has mean {self.jump_mean()}"
            )

    def jump_mean(self) -> float:
        """Analytic E[Z1] of a single jump."""
        if self.jump_law == "two_point":
            return self.zeta * (2.0 * self.up_weight - 1.0)
        return 0.0  # uniform and truncated_gaussian are symmetric

    def jump_second_moment(self) -> float:
        """Analytic E[Z1^2] of a single jump."""
        z = self.zeta
        if self.jump_law == "uniform":
            return z * z / 3.0
        if self.jump_law == "two_point":
            return z * z
        # truncated gaussian: second moment of a std normal conditioned on
        # [-c, c] is 1 - 2*c*phi(c)/(2*Phi(c) - 1); then rescale by (z/c)^2
        c = _TRUNC_CUT
        m2 = 1.0 - 2.0 * c * _norm_pdf(c) / (2.0 * _norm_cdf(c) - 1.0)
        return (z / c) ** 2 * m2

    def unit_ball_jump_mean(self) -> float:
        """Closed-form E[Z1 * 1_{|Z1| <= 1}] per law family."""
        if self.zeta <= 1.0:
            return self.jump_mean()
        # two_point mass sits at +-zeta outside the unit ball; the other
        # laws are symmetric, so the restricted mean vanishes either way
        return 0.0

    def is_martingale(self) -> bool:
        return bool(self.centered) or self.lambda_n == 0.0


@dataclass(frozen=True)
class JumpEvent:
    """A single jump of the compound Poisson part."""

    time: float
    size: float


@dataclass(frozen=True)
class NoisePath:
    """Sampled noise on a uniform grid: per-step Brownian increments plus
    the exact (off-grid) jump events inside the horizon."""

    dt: float
    n_steps: int
    brownian_increments: np.ndarray
    jumps: tuple[JumpEvent, ...]
    seed: object = None

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def cumulative_levy(self, sigma: float) -> np.ndarray:
        """L(t_k) = sigma*W(t_k) + sum of jumps with time <= t_k."""
        w = np.concatenate(([0.0], np.cumsum(self.brownian_increments)))
        z = np.zeros(self.n_steps + 1)
        for ev in self.jumps:
            k = int(math.ceil(ev.time / self.dt - 1e-12))
            z[min(k, self.n_steps):] += ev.size
        return sigma * w + z


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def sample_brownian_increments(seed, dt: float, n: int) -> np.ndarray:
    """n i.i.d. Normal(0, dt) increments; identical (seed, dt, n) gives
    identical output."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if n == 0:
        return np.empty(0)
    return _rng(seed).normal(0.0, math.sqrt(dt), n)


def sample_jump_sizes(rng: np.random.Generator, spec: NoiseSpec, n: int) -> np.ndarray:
    """n i.i.d. jump sizes from the spec's law; every |size| <= zeta."""
    z = spec.zeta
    if n == 0:
        return np.empty(0)
    if spec.jump_law == "uniform":
        return rng.uniform(-z, z, n)
    if spec.jump_law == "two_point":
        return np.where(rng.random(n) < spec.up_weight, z, -z)
    # truncated gaussian via inverse CDF (no rejection: fixed stream use)
    lo = _norm_cdf(-_TRUNC_CUT)
    hi = _norm_cdf(_TRUNC_CUT)
    u = lo + rng.random(n) * (hi - lo)
    return (z / _TRUNC_CUT) * ndtri(u)


def sample_jump_events(seed, spec: NoiseSpec, horizon: float) -> tuple[JumpEvent, ...]:
    """Compound-Poisson events on (0, horizon]:  Poisson(lambda_n * horizon)
    count, times uniform then sorted, sizes i.i.d. from the jump law."""
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    rng = _rng(seed)
    return _draw_jumps(rng, spec, horizon)


def _draw_jumps(rng: np.random.Generator, spec: NoiseSpec, horizon: float) -> tuple[JumpEvent, ...]:
    if spec.lambda_n == 0.0:
        return ()
    count = int(rng.poisson(spec.lambda_n * horizon))
    if count == 0:
        return ()
    times = np.sort((1.0 - rng.random(count)) * horizon)  # in (0, horizon]
    sizes = sample_jump_sizes(rng, spec, count)
    return tuple(JumpEvent(float(t), float(s)) for t, s in zip(times, sizes))


def sample_noise_path(seed, spec: NoiseSpec, dt: float, n_steps: int) -> NoisePath:
    """Sample a full noise path on an n_steps grid of step dt.

    Draw order (the determinism contract): jump count, jump times, jump
    sizes, then the per-step Brownian increments.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    rng = _rng(seed)
    jumps = _draw_jumps(rng, spec, n_steps * dt) if n_steps else ()
    dw = rng.normal(0.0, math.sqrt(dt), n_steps)
    return NoisePath(dt=dt, n_steps=n_steps, brownian_increments=dw, jumps=jumps, seed=seed)


def levy_moments(spec: NoiseSpec, t: float) -> tuple[float, float, float]:
    """(mean, variance, predictable quadratic variation) of L(t).

    With no continuous drift, E L(t) = lambda_n*E[Z1]*t and both the
    variance and <L>(t) equal lambda*t with lambda = sigma^2 + lambda_n*E[Z1^2].
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    lam = spec.sigma ** 2 + spec.lambda_n * spec.jump_second_moment()
    mean = spec.lambda_n * spec.jump_mean() * t
    return mean, lam * t, lam * t


def classify_noise(spec: NoiseSpec) -> str:
    """'HRegM' iff centered or lambda_n == 0, else 'HReg'.

    Every constructible spec has bounded jumps and finite intensity, so
    the classes nest as HRegM subset HReg subset HJudi.
    """
    return "HRegM" if spec.is_martingale() else "HReg"


def path_to_csv(path: NoisePath, sigma: float, file, header: str | None = None) -> None:
    """Write (t, dW, cumulative_L) rows; dW is 0 at t=0 by convention."""
    cum = path.cumulative_levy(sigma)
    dw = np.concatenate(([0.0], path.brownian_increments))
    _write_rows(file, header, "t,dW,cumulative_L",
                ((t, w, c) for t, w, c in zip(path.times(), dw, cum)))


def jumps_to_csv(jumps, file, header: str | None = None) -> None:
    _write_rows(file, header, "time,size", ((ev.time, ev.size) for ev in jumps))


def _write_rows(file, header, columns, rows) -> None:
    close = False
    if isinstance(file, (str,)):
        file = open(file, "w")
        close = True
    try:
        if header:
            file.write(f"# {header}\n")
        file.write(columns + "\n")
        for row in rows:
            file.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if close:
            file.close()
