from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import BackendError
from ..imaging import WindowBatch

DEFAULT_CLASS_COUNT = 23
NORMALIZATION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PredictionSet:
    """One class-probability vector per window, as an ``(N, K)`` array."""

    probs: np.ndarray

    @property
    def class_count(self) -> int:
        return self.probs.shape[1]

    def __len__(self):
        return self.probs.shape[0]

    def check(self, expected_windows: int, expected_classes: int = DEFAULT_CLASS_COUNT):
        if self.probs.ndim != 2 or len(self) != expected_windows:
            raise BackendError(
                f"window count mismatch: got {self.probs.shape[0] if self.probs.ndim else 0} "
                f"vectors for {expected_windows} windows"
            )
        if self.class_count != expected_classes:
            raise BackendError(f"class count mismatch: got {self.class_count}, expected {expected_classes}")
        if not np.all(self.probs >= 0):
            raise BackendError("negative or NaN probability in prediction set")
        worst = float(np.max(np.abs(self.probs.sum(axis=1) - 1.0))) if len(self) else 0.0
        if worst > NORMALIZATION_TOLERANCE:
            raise BackendError(f"probability vectors deviate from unit sum by {worst:.3g}")
        return self


class Backend(ABC):
    """A model that turns a batch of windows into per-window class probabilities.

    Instances may hold state (a latency chain, a child process) and must not
    be called concurrently.
    """

    class_count: int = DEFAULT_CLASS_COUNT

    @abstractmethod
    def infer(self, batch: WindowBatch) -> PredictionSet:
        ...

    def describe(self) -> dict:
        """Configuration needed to rebuild an equivalent backend."""
        return {}

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def check_batch(batch: WindowBatch):
    w = batch.windows
    if w.ndim != 4 or w.shape[0] == 0:
        raise BackendError(f"batch from {batch.source or '<memory>'} is empty or malformed: shape {w.shape}")
    if w.shape[1] != w.shape[2] or w.shape[3] != 3:
        raise BackendError(f"windows must be square RGB, got shape {w.shape[1:]}")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=-1, keepdims=True)
    return z
