"""Latency simulator with two baseline speeds.

Each call samples a duration from the current state's normal distribution,
sleeps for it, then lets a two-state semi-Markov chain advance: a state with
mean dwell ``m`` is left with probability ``1/m`` per call, so dwell times are
geometric with mean ``m``. A dwell mean of 0 pins the chain in that state.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..imaging import WindowBatch
from .base import DEFAULT_CLASS_COUNT, Backend, PredictionSet, check_batch

FAST = "fast"
SLOW = "slow"
MIN_DURATION = 1e-6


@dataclass(frozen=True)
class LatencyModel:
    fast_mean: float = 0.007
    slow_mean: float = 0.009
    jitter_sd: float = 0.0
    fast_dwell_mean: float = 0.0
    slow_dwell_mean: float = 0.0
    start_state: str = FAST
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.fast_mean <= self.slow_mean:
            raise ValueError(f"need 0 < fast_mean <= slow_mean, got {self.fast_mean}, {self.slow_mean}")
        if not self.jitter_sd >= 0:
            raise ValueError(f"jitter_sd must be >= 0, got {self.jitter_sd}")
        for name in ("fast_dwell_mean", "slow_dwell_mean"):
            value = getattr(self, name)
            if not (value == 0 or value >= 1):
                raise ValueError(f"{name} must be 0 (never switch) or >= 1, got {value}")
        if self.start_state not in (FAST, SLOW):
            raise ValueError(f"start_state must be {FAST!r} or {SLOW!r}")

    @property
    def stationary_slow_fraction(self) -> float:
        """Long-run share of calls spent in the slow state (NaN if pinned)."""
        if self.fast_dwell_mean == 0 or self.slow_dwell_mean == 0:
            return math.nan
        return self.slow_dwell_mean / (self.fast_dwell_mean + self.slow_dwell_mean)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def for_occupancy(cls, slow_fraction: float, cycle: float = 25.0, **kwargs):
        """Model whose stationary slow share is ``slow_fraction`` over ``cycle`` calls."""
        if not 0 < slow_fraction < 1:
            raise ValueError("slow_fraction must lie strictly between 0 and 1")
        slow = max(1.0, slow_fraction * cycle)
        fast = max(1.0, slow * (1 - slow_fraction) / slow_fraction)
        return cls(fast_dwell_mean=fast, slow_dwell_mean=slow, **kwargs)


class LatencyChain:
    def __init__(self, model: LatencyModel):
        self.model = model
        self.rng = np.random.default_rng(model.seed)
        self.state = model.start_state

    def step(self) -> tuple[str, float]:
        """Sample this call's (state, intended duration) and advance the chain."""
        m = self.model
        state = self.state
        mean = m.fast_mean if state == FAST else m.slow_mean
        duration = max(MIN_DURATION, mean + m.jitter_sd * self.rng.standard_normal())
        dwell = m.fast_dwell_mean if state == FAST else m.slow_dwell_mean
        u = self.rng.random()
        if dwell and u < 1.0 / dwell:
            self.state = SLOW if state == FAST else FAST
        return state, duration


def simulate_latency(model: LatencyModel, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Intended durations and slow-state flags for ``n`` calls, without sleeping.

    Produces the same sequence a fresh :class:`SyntheticBackend` would.
    """
    chain = LatencyChain(model)
    durations = np.empty(n)
    slow = np.empty(n, dtype=bool)
    for i in range(n):
        state, durations[i] = chain.step()
        slow[i] = state == SLOW
    return durations, slow


def sleep_precise(seconds: float):
    deadline = time.perf_counter_ns() + math.ceil(seconds * 1e9)
    while True:
        remaining = deadline - time.perf_counter_ns()
        if remaining <= 0:
            return
        time.sleep(remaining / 1e9)


class SyntheticBackend(Backend):
    """Returns uniform probabilities after a simulated model delay.

    ``intended`` and ``states`` grow by one entry per call so tests can
    compare measured latency against what was asked for.
    """

    def __init__(self, model: LatencyModel, sleep: bool = True, class_count: int = DEFAULT_CLASS_COUNT):
        self.model = model
        self.sleep = sleep
        self.class_count = class_count
        self.chain = LatencyChain(model)
        self.intended: list[float] = []
        self.states: list[str] = []

    def infer(self, batch: WindowBatch) -> PredictionSet:
        check_batch(batch)
        state, duration = self.chain.step()
        self.intended.append(duration)
        self.states.append(state)
        if self.sleep:
            sleep_precise(duration)
        n = len(batch)
        return PredictionSet(np.full((n, self.class_count), 1.0 / self.class_count))

    def describe(self) -> dict:
        return {"kind": "synthetic", **self.model.to_dict()}
