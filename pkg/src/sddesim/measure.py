"""Time-average occupation measures from trajectories.

The stationary-distribution estimate is the discrete double sum over
trajectories and window grid times: mass of a bin is the number of
samples falling in it divided by the total sample count, so histograms
with identical edges are comparable across windows and initial data.
Accumulation is an associative merge of per-trajectory counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np

from .solver import Trajectory

__all__ = [
    "MeasureWindow",
    "Histogram1D",
    "Histogram2D",
    "occupation_histogram",
    "phase_portrait",
    "measure_distance",
    "stationarity_report",
    "StationarityReport",
    "histogram_to_csv",
    "histogram2d_to_csv",
]

DEFAULT_BINS = 200


@dataclass(frozen=True)
class MeasureWindow:
    """Sampling window [start, start + length] at a recorded-grid stride."""

    start: float
    length: float
    stride: int = 1

    def __post_init__(self):
        if self.start < 0:
            raise ValueError("window start must be >= 0")
        if self.length <= 0:
            raise ValueError("window length must be > 0")
        if self.stride < 1 or int(self.stride) != self.stride:
            raise ValueError("stride must be a positive integer")

    @property
    def end(self) -> float:
        return self.start + self.length

    def overlaps(self, other: "MeasureWindow") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Histogram1D:
    """Normalized histogram; mass sums to 1 together with the clipped tails.

    Integer counts are kept alongside the normalized mass so merged and
    marginalized histograms stay bin-exact.
    """

    edges: np.ndarray
    mass: np.ndarray
    counts: np.ndarray
    n_samples: int
    out_of_range: tuple[float, float]  # (mass below lo, mass above hi)

    def __post_init__(self):
        total = float(self.mass.sum()) + sum(self.out_of_range)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"histogram mass must total 1, got {total}")

    @property
    def bins(self) -> int:
        return len(self.mass)

    def support(self) -> tuple[float, float]:
        """[lo, hi] edges of the occupied bins (clipped mass excluded)."""
        nz = np.nonzero(self.mass)[0]
        if nz.size == 0:
            raise ValueError("histogram carries no in-range mass")
        return float(self.edges[nz[0]]), float(self.edges[nz[-1] + 1])


@dataclass(frozen=True)
class Histogram2D:
    x_edges: np.ndarray
    y_edges: np.ndarray
    mass: np.ndarray
    counts: np.ndarray
    n_samples: int
    out_of_range: float

    def __post_init__(self):
        total = float(self.mass.sum()) + self.out_of_range
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"histogram mass must total 1, got {total}")

    def marginal_second_axis(self) -> np.ndarray:
        """Distribution of the second coordinate (sum over the first axis).

        Computed from the integer counts so it reproduces the 1D
        occupation histogram of the same window bin for bin.
        """
        return self.counts.sum(axis=0) / self.n_samples


def _as_list(trajectories) -> list[Trajectory]:
    if isinstance(trajectories, Trajectory):
        return [trajectories]
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("need at least one trajectory")
    return trajs


def _window_index_sets(trajs, window: MeasureWindow):
    sets = []
    for tr in trajs:
        if window.end > tr.horizon + 1e-9:
            raise ValueError(
                f"window [{window.start}, {window.end}] exceeds horizon {tr.horizon}")
        idx = tr.window_indices(window.start, window.end, window.stride)
        if idx.size == 0:
            raise ValueError("window contains no recorded samples")
        sets.append(idx)
    return sets


def occupation_histogram(trajectories, window: MeasureWindow, bins: int = DEFAULT_BINS,
                         value_range: tuple[float, float] = (0.0, 2.0)) -> Histogram1D:
    """Histogram of every sample (trajectory i, window time t_k).

    Mass of a bin is count/((M+1)*N) with the count taken over all
    trajectories and all recorded grid times inside the window; samples
    outside [lo, hi] are tallied in out_of_range, not dropped silently.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = value_range
    if not hi > lo:
        raise ValueError("value range must satisfy hi > lo")
    trajs = _as_list(trajectories)
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    below = above = 0
    total = 0
    for tr, idx in zip(trajs, _window_index_sets(trajs, window)):
        vals = tr.values[idx]
        c, _ = np.histogram(vals, bins=edges)
        counts += c
        below += int(np.sum(vals < lo))
        above += int(np.sum(vals > hi))
        total += vals.size
    return Histogram1D(edges=edges, mass=counts / total, counts=counts,
                       n_samples=total, out_of_range=(below / total, above / total))


def phase_portrait(trajectories, window: MeasureWindow, bins: int = DEFAULT_BINS,
                   value_range: tuple[float, float] = (0.0, 2.0),
                   delayed_range: Optional[tuple[float, float]] = None) -> Histogram2D:
    """2D push-forward over pairs (x(t - tau), x(t)) for window times t.

    The delayed value is read from the same trajectory's grid, so tau must
    be a multiple of the recorded step.  Its marginal over the second
    coordinate reproduces occupation_histogram bin for bin.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = value_range
    dlo, dhi = delayed_range if delayed_range is not None else value_range
    if not (hi > lo and dhi > dlo):
        raise ValueError("value ranges must satisfy hi > lo")
    trajs = _as_list(trajectories)
    x_edges = np.linspace(dlo, dhi, bins + 1)
    y_edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros((bins, bins), dtype=np.int64)
    total = 0
    for tr, idx in zip(trajs, _window_index_sets(trajs, window)):
        m = tr.m
        if idx[0] - m < 0:
            raise ValueError("window must start at least tau past the history start")
        now = tr.values[idx]
        delayed = tr.values[idx - m]
        c, _, _ = np.histogram2d(delayed, now, bins=(x_edges, y_edges))
        counts += c.astype(np.int64)
        total += now.size
    mass = counts / total
    return Histogram2D(x_edges=x_edges, y_edges=y_edges, mass=mass, counts=counts,
                       n_samples=total, out_of_range=(total - int(counts.sum())) / total)


def measure_distance(h1: Histogram1D, h2: Histogram1D) -> float:
    """L1 distance between two histograms on identical edges; in [0, 2]."""
    if h1.edges.shape != h2.edges.shape or not np.array_equal(h1.edges, h2.edges):
        raise ValueError("histograms must share identical bin edges")
    return float(np.abs(h1.mass - h2.mass).sum())


@dataclass(frozen=True)
class StationarityReport:
    windows: tuple[MeasureWindow, ...]
    distances: tuple[tuple[int, int, float], ...]
    max_distance: float
    threshold: float
    passed: bool


def stationarity_report(trajectories, windows: Sequence[MeasureWindow],
                        bins: int = DEFAULT_BINS,
                        value_range: tuple[float, float] = (0.0, 2.0),
                        threshold: float = 0.05) -> StationarityReport:
    """Pairwise L1 distances between the histograms of disjoint windows."""
    if len(windows) < 2:
        raise ValueError("need at least two windows")
    for a, b in combinations(range(len(windows)), 2):
        if windows[a].overlaps(windows[b]):
            raise ValueError(f"windows {a} and {b} overlap")
    hists = [occupation_histogram(trajectories, w, bins, value_range) for w in windows]
    dists = tuple((a, b, measure_distance(hists[a], hists[b]))
                  for a, b in combinations(range(len(windows)), 2))
    mx = max(d for _, _, d in dists)
    return StationarityReport(windows=tuple(windows), distances=dists,
                              max_distance=mx, threshold=threshold,
                              passed=mx < threshold)


def histogram_to_csv(h: Histogram1D, file, header: Optional[str] = None) -> None:
    """Rows (bin_lo, bin_hi, mass)."""
    _write_rows(file, header, "bin_lo,bin_hi,mass",
                zip(h.edges[:-1], h.edges[1:], h.mass))


def histogram2d_to_csv(h: Histogram2D, file, header: Optional[str] = None,
                       dense: bool = False) -> None:
    """Long-format rows (x_lo, x_hi, y_lo, y_hi, mass), or the dense matrix."""
    if dense:
        close = isinstance(file, str)
        fh = open(file, "w") if close else file
        try:
            if header:
                fh.write(f"# {header}\n")
            for row in h.mass:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        finally:
            if close:
                fh.close()
        return

    def rows():
        for i in range(h.mass.shape[0]):
            for j in range(h.mass.shape[1]):
                yield (h.x_edges[i], h.x_edges[i + 1],
                       h.y_edges[j], h.y_edges[j + 1], h.mass[i, j])
    _write_rows(file, header, "x_lo,x_hi,y_lo,y_hi,mass", rows())


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
