"""Deterministic fixed-weight stand-in for a segmentation network.

The kernel is a single 3x3 valid convolution to 8 channels, ReLU, global
average pooling and an affine map to class logits followed by softmax. It has
no learned meaning; it only guarantees a real, area-proportional compute load
and a well-formed probability output.
"""

from __future__ import annotations

import math

import numpy as np

from ..imaging import WindowBatch
from .base import DEFAULT_CLASS_COUNT, Backend, PredictionSet, check_batch, softmax

CONV_CHANNELS = 8
KERNEL = 3
_MASK64 = (1 << 64) - 1


def splitmix64(state: int):
    """Yield the splitmix64 output stream for ``state``."""
    state &= _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def _uniform_signed(gen, count: int) -> np.ndarray:
    # top 53 bits -> [0, 1) -> [-1, 1)
    return np.array([(next(gen) >> 11) * 2.0**-53 * 2 - 1 for _ in range(count)])


class ReferenceWeights:
    def __init__(self, seed: int, class_count: int = DEFAULT_CLASS_COUNT):
        gen = splitmix64(seed)
        fan_in = KERNEL * KERNEL * 3
        conv = _uniform_signed(gen, fan_in * CONV_CHANNELS) / math.sqrt(fan_in)
        self.conv = conv.reshape(KERNEL, KERNEL, 3, CONV_CHANNELS).astype(np.float32)
        # pooled activations are small, so the projection is scaled up to spread logits
        proj = _uniform_signed(gen, CONV_CHANNELS * class_count) * 4.0
        self.proj = proj.reshape(CONV_CHANNELS, class_count)
        self.bias = _uniform_signed(gen, class_count)


def _conv_relu_pool(windows: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    n, h, w, _ = windows.shape
    if h < KERNEL:
        pad = KERNEL - h
        windows = np.pad(windows, ((0, 0), (pad // 2, pad - pad // 2), (pad // 2, pad - pad // 2), (0, 0)), mode="edge")
        n, h, w, _ = windows.shape
    oh, ow = h - KERNEL + 1, w - KERNEL + 1
    acc = np.zeros((n, oh, ow, CONV_CHANNELS), dtype=np.float32)
    for dy in range(KERNEL):
        for dx in range(KERNEL):
            acc += windows[:, dy : dy + oh, dx : dx + ow, :] @ kernel[dy, dx]
    np.maximum(acc, 0, out=acc)
    return acc.mean(axis=(1, 2), dtype=np.float64)


def reference_infer(batch: WindowBatch, seed: int, weights: ReferenceWeights | None = None) -> PredictionSet:
    check_batch(batch)
    if weights is None:
        weights = ReferenceWeights(seed)
    windows = np.asarray(batch.windows, dtype=np.float32)
    pooled = _conv_relu_pool(windows, weights.conv)
    logits = pooled @ weights.proj + weights.bias
    return PredictionSet(softmax(logits))


class ReferenceBackend(Backend):
    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.weights = ReferenceWeights(self.seed, self.class_count)

    def infer(self, batch: WindowBatch) -> PredictionSet:
        return reference_infer(batch, self.seed, self.weights)

    def describe(self) -> dict:
        return {"kind": "reference", "seed": self.seed}
