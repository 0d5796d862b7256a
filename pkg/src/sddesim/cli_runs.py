"""Config-driven pipelines behind the command-line front end.

Each pipeline takes a parsed ExperimentConfig, runs the simulation or
evaluation it describes, and writes plot-tool-agnostic CSV files whose
first line records the toolkit version and the config hash.
"""

from __future__ import annotations

import math
import os
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import (
    SyntheticProcess,
    TailBoundParams,
    bound_composite,
    bound_curve,
    bound_reverse_sup_brownian,
    bound_reverse_sup_levy,
    bound_window_sup_brownian,
    bound_window_sup_levy,
    mc_verify_tail_bound,
)
from .config import ExperimentConfig, load_preset
from .measure import histogram2d_to_csv, histogram_to_csv, occupation_histogram, phase_portrait
from .solver import (
    Trajectory,
    ensemble_to_csv,
    history_from_csv,
    simulate_ensemble,
    trajectory_to_csv,
)

FIGURE_TIMESERIES_SPAN = 50.0  # figures export the solution on [-tau, 50]


def provenance(cfg: ExperimentConfig) -> str:
    return f"sddesim v{__version__} config={cfg.hash}"


def resolve_history(cfg: ExperimentConfig, space: str):
    if cfg.history_csv is not None:
        hist = history_from_csv(cfg.history_csv, cfg.model.tau, cfg.trajectory.dt)
        if cfg.history_space != space:
            hist = np.exp(hist) if space == "original" else np.log(hist)
        return hist
    if cfg.history_constant is not None:
        return cfg.history_for_space(space)
    return 0.0 if space == "transformed" else 1.0


def run_simulation(cfg: ExperimentConfig, workers: int = 1) -> list[Trajectory]:
    if cfg.model is None or cfg.trajectory is None:
        raise ValueError("config lacks the model/trajectory sections needed to simulate")
    history = resolve_history(cfg, cfg.trajectory.space)
    return simulate_ensemble(cfg.model, cfg.noise, history, cfg.trajectory,
                             cfg.n_trajectories, workers=workers)


def _subsample(traj: Trajectory, t_max: Optional[float]) -> tuple[np.ndarray, np.ndarray]:
    if t_max is None:
        return traj.times, traj.values
    keep = traj.times <= t_max + 1e-9
    return traj.times[keep], traj.values[keep]


def write_timeseries(cfg: ExperimentConfig, trajs: Sequence[Trajectory],
                     out_dir: str, t_max: Optional[float] = None) -> str:
    path = os.path.join(out_dir, "timeseries.csv")
    header = provenance(cfg)
    if len(trajs) == 1:
        t, v = _subsample(trajs[0], t_max)
        clipped = Trajectory(times=t, values=v, space=trajs[0].space,
                             dt=trajs[0].dt, tau=trajs[0].tau, seed=trajs[0].seed)
        trajectory_to_csv(clipped, path, header=header)
    else:
        clipped = []
        for tr in trajs:
            t, v = _subsample(tr, t_max)
            clipped.append(Trajectory(times=t, values=v, space=tr.space,
                                      dt=tr.dt, tau=tr.tau, seed=tr.seed))
        ensemble_to_csv(clipped, path, header=header)
    return path


def write_histogram(cfg: ExperimentConfig, trajs: Sequence[Trajectory],
                    out_dir: str) -> str:
    h = occupation_histogram(trajs, cfg.window, cfg.bins, cfg.value_range)
    path = os.path.join(out_dir, "histogram.csv")
    histogram_to_csv(h, path, header=provenance(cfg))
    return path


def write_phase(cfg: ExperimentConfig, trajs: Sequence[Trajectory],
                out_dir: str) -> tuple[str, str]:
    h = phase_portrait(trajs, cfg.window, cfg.bins, cfg.value_range)
    path = os.path.join(out_dir, "phase.csv")
    histogram2d_to_csv(h, path, header=provenance(cfg))
    dense = os.path.join(out_dir, "phase_matrix.csv")
    histogram2d_to_csv(h, dense, header=provenance(cfg), dense=True)
    return path, dense


def run_figures(preset: str, out_dir: str, workers: int = 1,
                overrides: Sequence[str] = ()) -> list[str]:
    """End-to-end reproduction pipeline: time series + histogram + phase."""
    cfg = load_preset(preset, overrides)
    os.makedirs(out_dir, exist_ok=True)
    trajs = run_simulation(cfg, workers)
    files = [write_timeseries(cfg, trajs, out_dir,
                              t_max=min(FIGURE_TIMESERIES_SPAN, cfg.trajectory.t_end))]
    files.append(write_histogram(cfg, trajs, out_dir))
    files.extend(write_phase(cfg, trajs, out_dir))
    blown = [i for i, tr in enumerate(trajs) if tr.diagnostics.blow_down is not None]
    if blown:
        flag = os.path.join(out_dir, "blow_downs.txt")
        with open(flag, "w") as fh:
            fh.write(f"# {provenance(cfg)}\n")
            for i in blown:
                fh.write(f"trajectory {i} blew down at "
                         f"t = {trajs[i].diagnostics.blow_down}\n")
        files.append(flag)
    return files


def bounds_params_from(cfg: ExperimentConfig) -> tuple[TailBoundParams, dict]:
    sec = cfg.bounds
    if sec is None:
        raise ValueError("config lacks a bounds section")
    noise = cfg.noise
    params = TailBoundParams.from_noise(
        alpha=float(sec["alpha"]), beta=float(sec["beta"]), noise=noise,
        T=float(sec.get("T", 1.0)), kappa2=float(sec.get("kappa2", 1.0)),
        q_split=float(sec.get("q_split", 0.99)))
    return params, sec


def bound_fn_for(cfg: ExperimentConfig):
    params, sec = bounds_params_from(cfg)
    statistic = sec.get("statistic", "reverse_sup")
    noise = cfg.noise
    pure_brownian = noise.lambda_n == 0.0 or noise.zeta == 0.0
    if statistic == "reverse_sup":
        if pure_brownian:
            return statistic, lambda R, with_terms=False: (
                bound_reverse_sup_brownian(params.alpha, params.beta * noise.sigma, R))
        return statistic, lambda R, with_terms=False: bound_reverse_sup_levy(
            params, R, with_terms=with_terms)
    if statistic == "window_sup":
        if pure_brownian:
            return statistic, lambda R, with_terms=False: (
                bound_window_sup_brownian(params.beta * noise.sigma, params.T, R))
        return statistic, lambda R, with_terms=False: bound_window_sup_levy(
            params, R, with_terms=with_terms)
    if statistic == "composite":
        return "reverse_sup", lambda R, with_terms=False: bound_composite(
            params, R, with_terms=with_terms)
    raise ValueError(f"unknown bounds statistic {statistic!r}")


def run_bounds(cfg: ExperimentConfig, out_dir: str) -> str:
    """Evaluate the configured bound on its R grid and export the curve."""
    _, sec = bounds_params_from(cfg)
    _, fn = bound_fn_for(cfg)
    curve = bound_curve(fn, sec["R_grid"], label=sec.get("statistic", "reverse_sup"))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "bounds.csv")
    curve.to_csv(path, header=provenance(cfg))
    return path


def run_bound_verification(cfg: ExperimentConfig, out_dir: str, seed: int = 12345):
    """MC-verify the configured bound; returns (report, csv path)."""
    params, sec = bounds_params_from(cfg)
    statistic, fn = bound_fn_for(cfg)
    proc = SyntheticProcess(alpha=params.alpha, beta=params.beta, noise=cfg.noise)
    rep = mc_verify_tail_bound(proc, statistic, float(sec.get("horizon", 20)),
                               lambda R: fn(R), sec["R_grid"],
                               n_samples=int(sec.get("n_samples", 10_000)),
                               confidence=float(sec.get("confidence", 0.99)),
                               dt=float(sec.get("dt", 0.01)), seed=seed)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "verification.csv")
    rep.to_csv(path, header=provenance(cfg))
    with open(os.path.join(out_dir, "verification_summary.txt"), "w") as fh:
        fh.write(rep.summary() + "\n")
    return rep, path
