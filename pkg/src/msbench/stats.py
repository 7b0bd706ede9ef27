"""Descriptive statistics over latency traces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class StatSummary:
    n: int
    mean: float
    median: float
    p5: float
    p95: float
    min: float
    max: float
    stddev: float


def _as_sorted(samples) -> np.ndarray:
    arr = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if arr.size == 0:
        raise ValueError("percentile of an empty sample set is undefined")
    return arr


def _interp_sorted(arr: np.ndarray, p: float) -> float:
    if not 0 <= p <= 100:
        raise ValueError(f"percentile must lie in [0, 100], got {p}")
    h = (arr.size - 1) * p / 100
    lo = math.floor(h)
    hi = math.ceil(h)
    a, b = float(arr[lo]), float(arr[hi])
    if lo == hi or a == b:
        return a
    return min(max(a + (h - lo) * (b - a), a), b)


def percentile(samples: Iterable[float], p: float) -> float:
    """Linear-interpolated percentile with rank ``(n - 1) * p / 100``."""
    return _interp_sorted(_as_sorted(samples), p)


def percentiles(samples: Iterable[float], ps: Sequence[float]) -> list[float]:
    """Several percentiles of one sample set, sorting only once."""
    arr = _as_sorted(samples)
    return [_interp_sorted(arr, p) for p in ps]


def summarize(samples: Iterable[float]) -> StatSummary:
    arr = _as_sorted(samples)
    lo, hi = float(arr[0]), float(arr[-1])
    mean = min(max(math.fsum(arr) / arr.size, lo), hi)
    var = math.fsum((arr - mean) ** 2) / arr.size
    return StatSummary(
        n=int(arr.size),
        mean=mean,
        median=_interp_sorted(arr, 50),
        p5=_interp_sorted(arr, 5),
        p95=_interp_sorted(arr, 95),
        min=lo,
        max=hi,
        stddev=math.sqrt(var),
    )
