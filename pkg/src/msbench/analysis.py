"""Trace analyses: two-regime detection, run classification, run comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import stats

FAST = "fast"
SLOW = "slow"

NORMAL = "normal"
LOW_PERFORMANCE = "low_performance"
UNIMODAL = "unimodal"

MIN_REGIME_SAMPLES = 20
DEFAULT_GRID = tuple(range(1, 100))


@dataclass(frozen=True)
class Trace:
    """Model times in capture order, with the sample indices where a new directory begins."""

    run_label: str
    samples: np.ndarray
    directory_boundaries: tuple = ()

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64).ravel()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        bounds = tuple(int(b) for b in self.directory_boundaries)
        if any(b <= 0 or b >= arr.size for b in bounds) or any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValueError(f"directory boundaries must be strictly increasing within (0, {arr.size})")
        object.__setattr__(self, "directory_boundaries", bounds)

    def __len__(self):
        return self.samples.size

    @classmethod
    def from_directories(cls, run_label: str, directories: Iterable[tuple], exclude_warmup: bool = True):
        """Concatenate per-directory time lists, optionally dropping each directory's first time."""
        samples: list[float] = []
        bounds = []
        for _, times in directories:
            times = list(times)[1:] if exclude_warmup else list(times)
            if times and samples:
                bounds.append(len(samples))
            samples.extend(times)
        return cls(run_label, np.array(samples, dtype=np.float64), tuple(bounds))


def trace_from_summary(summary, run_label: str = "run", exclude_warmup: bool = True) -> Trace:
    return Trace.from_directories(
        run_label, ((d.directory_name, d.times) for d in summary.directories), exclude_warmup
    )


def _samples(trace) -> np.ndarray:
    if isinstance(trace, Trace):
        return trace.samples
    return np.asarray(trace, dtype=np.float64).ravel()


@dataclass(frozen=True)
class RegimeAnalysis:
    bimodal: bool
    fast_mean: float
    slow_mean: float
    slow_mask: np.ndarray = field(repr=False)
    slow_occupancy: float
    separation_ratio: float
    iterations: int = 0

    @property
    def labels(self) -> list[str]:
        return [SLOW if s else FAST for s in self.slow_mask]


def lloyd_two_means(x: np.ndarray, fast_center: float, slow_center: float, max_iter: int = 100):
    """Two-cluster 1-D Lloyd iteration from the given centers.

    A sample joins the slow cluster only when strictly closer to the slow
    center. Returns ``(fast_center, slow_center, slow_mask, iterations)``;
    ``iterations`` counts center updates before the assignment stopped
    changing.
    """
    mask = None
    iterations = 0
    for _ in range(max_iter + 1):
        if slow_center > fast_center:
            new_mask = x > (fast_center + slow_center) / 2
        else:
            new_mask = np.zeros(x.shape, dtype=bool)
        if mask is not None and np.array_equal(new_mask, mask):
            break
        mask = new_mask
        if iterations == max_iter:
            break
        n_slow = int(mask.sum())
        if n_slow:
            slow_center = float(x[mask].mean())
        if n_slow < x.size:
            fast_center = float(x[~mask].mean())
        iterations += 1
    return fast_center, slow_center, mask, iterations


def detect_regimes(trace, ratio_threshold: float = 1.15, min_fraction: float = 0.02,
                   max_iter: int = 100) -> RegimeAnalysis:
    """Split a trace into fast and slow baselines with two-means clustering.

    Centers start at the 10th and 90th percentiles (the extremes if those
    coincide). The split counts as
    bimodal only when the slow/fast mean ratio reaches ``ratio_threshold``
    and each cluster holds at least ``min_fraction`` of the samples. Traces
    shorter than 20 samples are always reported unimodal.
    """
    x = _samples(trace)
    if x.size < 1:
        raise ValueError("regime detection needs at least one sample")

    def unimodal(iterations=0):
        mean = math.fsum(x) / x.size
        return RegimeAnalysis(False, mean, mean, np.zeros(x.size, dtype=bool), 0.0, 1.0, iterations)

    if x.size < MIN_REGIME_SAMPLES:
        return unimodal()
    lo, hi = stats.percentiles(x, (10, 90))
    if lo == hi:
        # a minority mode under 10% with no jitter collapses both seeds onto one value
        lo, hi = float(x.min()), float(x.max())
    fast, slow, mask, iterations = lloyd_two_means(x, lo, hi, max_iter)
    slow_share = float(mask.mean())
    if fast > 0:
        ratio = slow / fast
    else:
        ratio = math.inf if slow > 0 else 1.0
    if ratio >= ratio_threshold and min(slow_share, 1 - slow_share) >= min_fraction:
        return RegimeAnalysis(True, fast, slow, mask, slow_share, ratio, iterations)
    return unimodal(iterations)


def classify_run(analysis: RegimeAnalysis, occupancy_threshold: float = 0.5) -> str:
    if not analysis.bimodal:
        return UNIMODAL
    return LOW_PERFORMANCE if analysis.slow_occupancy > occupancy_threshold else NORMAL


@dataclass(frozen=True)
class ComparisonReport:
    labels: tuple
    percentile_grid: tuple
    curves: dict
    differences: tuple  # curve[B] - curve[A] at each grid point
    crossover_percentiles: tuple
    headline: dict  # statistic -> (leader label or "tie", value A, value B)

    def leader(self, statistic: str) -> str:
        return self.headline[statistic][0]


RunInput = Union[Trace, Sequence[Trace]]


def _as_runs(runs) -> list[np.ndarray]:
    if isinstance(runs, (Trace, np.ndarray)) or (len(runs) and np.isscalar(runs[0])):
        runs = [runs]
    runs = [_samples(r) for r in runs]
    if not runs:
        raise ValueError("comparison needs at least one trace per side")
    if any(r.size == 0 for r in runs):
        raise ValueError("cannot compare an empty trace")
    return runs


def _averaged(runs: list[np.ndarray], ps: Sequence[float]) -> np.ndarray:
    return np.mean([stats.percentiles(r, ps) for r in runs], axis=0)


def _sign_changes(diffs: Sequence[float], grid: Sequence[float]) -> list:
    crossings = []
    prev = 0
    for p, d in zip(grid, diffs):
        s = (d > 0) - (d < 0)
        if s == 0:
            continue
        if prev and s != prev:
            crossings.append(p)
        prev = s
    return crossings


def compare_runs(a: RunInput, b: RunInput, grid: Sequence[float] = DEFAULT_GRID,
                 labels: tuple = ("A", "B")) -> ComparisonReport:
    """Compare two runs (or groups of runs) across a percentile grid.

    Grouped runs contribute the unweighted mean of their per-run percentile
    values. A crossover is a grid point where the sign of ``B - A`` differs
    from the last nonzero sign before it.
    """
    runs_a, runs_b = _as_runs(a), _as_runs(b)
    grid = tuple(grid)
    curve_a = _averaged(runs_a, grid)
    curve_b = _averaged(runs_b, grid)
    diffs = curve_b - curve_a

    head_a = _averaged(runs_a, (50, 5, 95))
    head_b = _averaged(runs_b, (50, 5, 95))
    pooled = (float(np.concatenate(runs_a).mean()), float(np.concatenate(runs_b).mean()))
    values = {
        "mean": pooled,
        "median": (float(head_a[0]), float(head_b[0])),
        "p5": (float(head_a[1]), float(head_b[1])),
        "p95": (float(head_a[2]), float(head_b[2])),
    }
    headline = {}
    for name, (va, vb) in values.items():
        leader = labels[0] if va < vb else labels[1] if vb < va else "tie"
        headline[name] = (leader, va, vb)

    return ComparisonReport(
        labels=tuple(labels),
        percentile_grid=grid,
        curves={labels[0]: tuple(curve_a.tolist()), labels[1]: tuple(curve_b.tolist())},
        differences=tuple(diffs.tolist()),
        crossover_percentiles=tuple(_sign_changes(diffs.tolist(), grid)),
        headline=headline,
    )


def temporal_series(trace, smoothing_window: int = 1) -> list[tuple[int, float]]:
    """(ordinal, seconds) pairs in capture order, optionally smoothed.

    Smoothing is a centered moving average whose window shrinks at the edges.
    """
    if smoothing_window < 1:
        raise ValueError(f"smoothing window must be >= 1, got {smoothing_window}")
    x = _samples(trace)
    if x.size == 0:
        raise ValueError("temporal series of an empty trace")
    if smoothing_window == 1:
        return [(i, float(v)) for i, v in enumerate(x)]
    left = (smoothing_window - 1) // 2
    right = smoothing_window - 1 - left
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(x.size)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right + 1, x.size)
    means = (csum[hi] - csum[lo]) / (hi - lo)
    return [(int(i), float(v)) for i, v in zip(idx, means)]

