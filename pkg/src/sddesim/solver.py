"""Euler-Maruyama integration of the transformed delay equation.

The scheme advances Y_{n+1} = Y_n + drift(Y_n, Y_{n-m}, t_n) dt
+ b(Y_n) sigma dW_n, reading the delayed value straight from the
solution buffer (tau must be an integer multiple of dt, so no
interpolation ever happens and a noiseless fixed point stays put to
roundoff).  Jumps are never binned to the grid: each event splits its
step at the exact jump time, applies b(Y_{s-}) * z, and continues.

Trajectories are pure functions of (seed, inputs); ensemble trajectory i
draws from the stream (seed, i), so results are bit-identical regardless
of worker count or scheduling order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .models import (
    BLOW_DOWN_THRESHOLD,
    BlowDownError,
    ModelSpec,
    drift_offset,
    transformed_drift,
)
from .noise import JumpEvent, NoiseSpec, sample_noise_path

__all__ = [
    "Segment",
    "TrajectoryConfig",
    "Trajectory",
    "simulate_transformed",
    "simulate_original",
    "simulate_ensemble",
    "trajectory_to_csv",
    "ensemble_to_csv",
    "history_from_csv",
]

SPACES = ("transformed", "original")


@dataclass(frozen=True)
class Segment:
    """Solution samples on [t - tau, t] at grid resolution; len = m + 1."""

    values: np.ndarray
    t: float
    m: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.m + 1,):
            raise ValueError(f"segment needs m + 1 = {self.m + 1} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("segment values must be finite")


@dataclass(frozen=True)
class TrajectoryConfig:
    """Grid, horizon and reproducibility knobs for one run."""

    dt: float
    t_end: float
    burn_in: float = 0.0
    seed: int = 0
    space: str = "transformed"
    record_stride: int = 1
    store_forcing: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end <= 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if not 0 <= self.burn_in < self.t_end:
            raise ValueError("burn_in must lie in [0, t_end)")
        if self.space not in SPACES:
            raise ValueError(f"space must be one of {SPACES}")
        if self.record_stride < 1 or int(self.record_stride) != self.record_stride:
            raise ValueError("record_stride must be a positive integer")

    def n_steps(self) -> int:
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t_end = {self.t_end} is not a multiple of dt = {self.dt}")
        return n


@dataclass
class Diagnostics:
    blow_down: Optional[float] = None
    max_value: float = math.nan
    min_value: float = math.nan


@dataclass
class Trajectory:
    """A recorded solution path, including the initial history segment.

    ``times`` spans [-tau, horizon] at step dt * record_stride; ``values``
    are Y (transformed) or X = e^Y (original) per ``space``.  ``forcing``
    is the transformed-space path v = integral(a dt) + integral(b dL) on
    the same grid (zero over the history), kept only when requested.
    """

    times: np.ndarray
    values: np.ndarray
    space: str
    dt: float
    tau: float
    seed: object
    jump_log: tuple[JumpEvent, ...] = ()
    jump_increments: tuple[float, ...] = ()
    forcing: Optional[np.ndarray] = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def m(self) -> int:
        """Delay lag in recorded steps."""
        return round(self.tau / self.dt)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def window_indices(self, start: float, end: float, stride: int = 1) -> np.ndarray:
        """Indices of recorded times t with start <= t <= end."""
        eps = 1e-9 * max(1.0, abs(end))
        idx = np.nonzero((self.times >= start - eps) & (self.times <= end + eps))[0]
        return idx[::stride]

    def final_segment(self) -> Segment:
        m = self.m
        return Segment(values=self.values[-(m + 1):], t=self.horizon, m=m)


def _history_array(history, m: int, space: str) -> np.ndarray:
    if isinstance(history, Segment):
        vals = history.values
    elif np.isscalar(history):
        vals = np.full(m + 1, float(history))
    else:
        vals = np.asarray(history, dtype=float)
    if vals.shape != (m + 1,):
        raise ValueError(f"history must provide m + 1 = {m + 1} values, got {vals.shape}")
    if space == "original":
        if np.any(vals <= 0):
            raise ValueError("original-space history must be strictly positive")
        vals = np.log(vals)
    return vals.copy()


def _delay_steps(model: ModelSpec, cfg: TrajectoryConfig) -> int:
    m = round(model.tau / cfg.dt)
    if m < 1 or abs(m * cfg.dt - model.tau) > 1e-9 * model.tau:
        raise ValueError(f"tau/dt must be a positive integer (tau={model.tau}, dt={cfg.dt})")
    if m % cfg.record_stride != 0:
        raise ValueError("record_stride must divide tau/dt so delayed reads stay aligned")
    return m


def _jumps_by_step(jumps, dt: float) -> dict[int, list[JumpEvent]]:
    by_step: dict[int, list[JumpEvent]] = {}
    for ev in jumps:
        k = int(math.ceil(ev.time / dt - 1e-12)) - 1  # step k covers (k dt, (k+1) dt]
        by_step.setdefault(max(k, 0), []).append(ev)
    return by_step


def _jump_step(model, noise, yi, y_delay, t_left, dt, dw, events):
    """Sub-step split of one grid step containing jump events.

    Drift and diffusion integrate to each jump time (the step's Brownian
    increment is split proportionally, the bridge conditional mean), the
    jump applies b evaluated at the pre-jump state, and integration
    continues to the right grid edge.  Returns the new state, the forcing
    increment over the step, and the applied increments b(Y_{s-}) * z.
    """
    sig = noise.sigma
    v_inc = 0.0
    applied = []
    t_prev = t_left
    for ev in events:
        delta = ev.time - t_prev
        if delta > 0:
            det = transformed_drift(model, yi, y_delay, t_prev, noise)
            a_v = drift_offset(model, yi, noise)
            dw_part = model.b_value(yi) * sig * dw * (delta / dt)
            yi += det * delta + dw_part
            v_inc += a_v * delta + dw_part
        inc = model.b_value(yi) * ev.size
        yi += inc
        v_inc += inc
        applied.append(inc)
        t_prev = ev.time
    delta = t_left + dt - t_prev
    if delta > 0:
        det = transformed_drift(model, yi, y_delay, t_prev, noise)
        a_v = drift_offset(model, yi, noise)
        dw_part = model.b_value(yi) * sig * dw * (delta / dt)
        yi += det * delta + dw_part
        v_inc += a_v * delta + dw_part
    return yi, v_inc, applied


def _integrate(model: ModelSpec, noise: NoiseSpec, y_hist: np.ndarray,
               cfg: TrajectoryConfig, stream_index: int,
               dW: Optional[np.ndarray] = None):
    """Run the recurrence in log coordinates; returns full-resolution data."""
    dt = cfg.dt
    m = _delay_steps(model, cfg)
    n_steps = cfg.n_steps()
    stream = (cfg.seed, stream_index)

    path = sample_noise_path(list(stream), noise, dt, n_steps)
    if dW is not None:
        dW = np.asarray(dW, dtype=float)
        if dW.shape != (n_steps,):
            raise ValueError(f"dW must have shape ({n_steps},)")
    else:
        dW = path.brownian_increments
    jump_map = _jumps_by_step(path.jumps, dt)
    jump_steps = sorted(jump_map)

    vals = np.empty(m + 1 + n_steps)
    vals[:m + 1] = y_hist
    v_incs = np.zeros(n_steps) if cfg.store_forcing else None
    jump_log: list[JumpEvent] = []
    jump_incs: list[float] = []

    fb = model.feedback
    const_rates = model.gamma.is_constant and model.r.is_constant
    const_b = model.has_constant_b
    fast = const_rates and const_b
    if fast:
        gam = model.gamma.value(0.0)
        r_c = model.r.value(0.0)
        b_c = float(model.b_coupling)
        a_c = drift_offset(model, 0.0, noise)
        c0 = dt * (-gam + a_c)
        bs = b_c * noise.sigma
    exp = math.exp

    blow_down_at = None
    pos = 0
    jp = 0  # pointer into jump_steps
    while pos < n_steps and blow_down_at is None:
        if jp < len(jump_steps) and jump_steps[jp] == pos:
            yi = float(vals[m + pos])
            try:
                yi, v_inc, applied = _jump_step(
                    model, noise, yi, float(vals[pos]), pos * dt, dt,
                    float(dW[pos]), jump_map[pos])
            except BlowDownError:
                blow_down_at = pos
                break
            if yi < BLOW_DOWN_THRESHOLD:
                blow_down_at = pos  # drop the partial step entirely
                break
            vals[m + pos + 1] = yi
            if v_incs is not None:
                v_incs[pos] = v_inc
            jump_log.extend(jump_map[pos])
            jump_incs.extend(applied)
            pos += 1
            jp += 1
            continue

        end = min(pos + m, n_steps)
        if jp < len(jump_steps):
            end = min(end, jump_steps[jp])
        L = end - pos
        delayed = vals[pos:pos + L]
        if fast:
            F = (dt * r_c) * fb.value_at_log(delayed)
            dwc = bs * dW[pos:pos + L]
            yi = float(vals[m + pos])
            out = []
            append = out.append
            try:
                for fk, wk in zip(F.tolist(), dwc.tolist()):
                    yi = yi + c0 + exp(-yi) * fk + wk
                    append(yi)
            except OverflowError:
                out.extend([BLOW_DOWN_THRESHOLD - 100.0] * (L - len(out)))
            if v_incs is not None:
                v_incs[pos:pos + L] = a_c * dt + dwc
        else:
            times = np.arange(pos, pos + L) * dt
            gam_k = model.gamma.values_on(times)
            r_k = model.r.values_on(times)
            F = dt * r_k * fb.value_at_log(delayed)
            dwc = noise.sigma * dW[pos:pos + L]
            yi = float(vals[m + pos])
            out = []
            append = out.append
            a_inc = []
            try:
                for fk, wk, gk, tk in zip(F.tolist(), dwc.tolist(),
                                          gam_k.tolist(), times.tolist()):
                    b_v = model.b_value(yi)
                    a_v = drift_offset(model, yi, noise)
                    yi = yi + dt * (-gk + a_v) + exp(-yi) * fk + b_v * wk
                    append(yi)
                    a_inc.append(a_v * dt + b_v * wk)
            except OverflowError:
                pad = L - len(out)
                out.extend([BLOW_DOWN_THRESHOLD - 100.0] * pad)
                a_inc.extend([0.0] * pad)
            if v_incs is not None:
                v_incs[pos:pos + L] = a_inc
        chunk = np.asarray(out)
        if np.isnan(chunk).any():
            raise RuntimeError("NaN state encountered; this indicates a solver bug")
        vals[m + pos + 1:m + pos + 1 + L] = chunk
        low = np.nonzero(chunk < BLOW_DOWN_THRESHOLD)[0]
        if low.size:
            blow_down_at = pos + int(low[0]) + 1
            break
        pos = end

    if blow_down_at is not None:
        keep = blow_down_at  # number of completed steps to keep
        # the crossing value itself is kept unless e^y would underflow to 0
        if keep > 0 and vals[m + keep] < -744.0:
            keep -= 1
        vals = vals[:m + 1 + keep]
        if v_incs is not None:
            v_incs = v_incs[:keep]
        diag_time = blow_down_at * dt
    else:
        diag_time = None
    return vals, v_incs, tuple(jump_log), tuple(jump_incs), diag_time, stream


def _build_trajectory(model, cfg, vals, v_incs, jump_log, jump_incs, bd_time,
                      stream, space: str) -> Trajectory:
    m = round(model.tau / cfg.dt)
    stride = cfg.record_stride
    times = (np.arange(vals.size) - m) * cfg.dt
    rec_t = times[::stride]
    rec_v = vals[::stride].copy()
    forcing = None
    if v_incs is not None:
        v_full = np.concatenate([np.zeros(m + 1), np.cumsum(v_incs)])
        forcing = v_full[::stride]
    if space == "original":
        rec_v = np.exp(rec_v)
    diag = Diagnostics(blow_down=bd_time,
                       max_value=float(rec_v.max()),
                       min_value=float(rec_v.min()))
    return Trajectory(times=rec_t, values=rec_v, space=space,
                      dt=cfg.dt * stride, tau=model.tau, seed=stream,
                      jump_log=jump_log, jump_increments=jump_incs,
                      forcing=forcing, diagnostics=diag)


def simulate_transformed(model: ModelSpec, noise: NoiseSpec, history,
                         cfg: TrajectoryConfig, dW: Optional[np.ndarray] = None,
                         stream_index: int = 0) -> Trajectory:
    """Integrate the log-space equation from an initial segment on [-tau, 0].

    ``history`` may be a constant, an array of m + 1 grid samples, or a
    Segment.  ``dW`` optionally overrides the Brownian increments (for
    refinement studies); jumps still come from the seeded stream.
    """
    m = _delay_steps(model, cfg)
    y_hist = _history_array(history, m, "transformed")
    out = _integrate(model, noise, y_hist, cfg, stream_index, dW)
    return _build_trajectory(model, cfg, *out, space="transformed")


def simulate_original(model: ModelSpec, noise: NoiseSpec, history_x,
                      cfg: TrajectoryConfig, dW: Optional[np.ndarray] = None,
                      stream_index: int = 0) -> Trajectory:
    """Integrate in log space and return X = e^Y (strictly positive)."""
    m = _delay_steps(model, cfg)
    y_hist = _history_array(history_x, m, "original")
    out = _integrate(model, noise, y_hist, cfg, stream_index, dW)
    return _build_trajectory(model, cfg, *out, space="original")


def _run_one(args):
    model, noise, history, cfg, idx = args
    if cfg.space == "original":
        return simulate_original(model, noise, history, cfg, stream_index=idx)
    return simulate_transformed(model, noise, history, cfg, stream_index=idx)


def simulate_ensemble(model: ModelSpec, noise: NoiseSpec, history,
                      cfg: TrajectoryConfig, n_traj: int,
                      workers: int = 1) -> list[Trajectory]:
    """n_traj independent trajectories; trajectory i uses stream (seed, i).

    Output is bit-identical for any worker count.  Per-trajectory
    diagnostics (blow-downs) are carried, never raised.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    jobs = [(model, noise, history, cfg, i) for i in range(n_traj)]
    if workers <= 1 or n_traj == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, jobs))


def trajectory_to_csv(traj: Trajectory, file, header: Optional[str] = None) -> None:
    """Rows (t, value) at the recorded stride, history included."""
    _write_rows(file, header, "t,value", zip(traj.times, traj.values))


def ensemble_to_csv(trajs: Sequence[Trajectory], file,
                    header: Optional[str] = None) -> None:
    """Long format rows (traj_id, t, value)."""
    def rows():
        for i, tr in enumerate(trajs):
            for t, v in zip(tr.times, tr.values):
                yield i, t, v
    _write_rows(file, header, "traj_id,t,value", rows())


def history_from_csv(file, tau: float, dt: float) -> np.ndarray:
    """Read (t, value) samples on [-tau, 0] and interpolate to the grid."""
    data = np.loadtxt(file, delimiter=",", skiprows=1, comments="#")
    data = np.atleast_2d(data)
    t, v = data[:, 0], data[:, 1]
    order = np.argsort(t)
    t, v = t[order], v[order]
    if t[0] > -tau + 1e-9 or t[-1] < -1e-9:
        raise ValueError("history samples must cover [-tau, 0]")
    m = round(tau / dt)
    grid = np.linspace(-tau, 0.0, m + 1)
    return np.interp(grid, t, v)


def _write_rows(file, header, columns, rows) -> None:
    close = False
    if isinstance(file, str):
        file = open(file, "w")
        close = True
    try:
        if header:
            file.write(f"# {header}\n")
        file.write(columns + "\n")
        for row in rows:
            file.write(",".join(repr(float(x)) for x in row) + "\n")
    finally:
        if close:
            file.close()
