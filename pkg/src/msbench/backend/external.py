"""Adapter for a model served by a child process over stdin/stdout.

The child stays alive for the whole run and answers one response frame per
request frame (see :mod:`msbench.backend.protocol`).
"""

from __future__ import annotations

import logging
import shlex
import subprocess
import tempfile

import numpy as np

from ..errors import BackendError, ProtocolError
from ..imaging import WindowBatch
from . import protocol
from .base import DEFAULT_CLASS_COUNT, Backend, PredictionSet, check_batch

log = logging.getLogger(__name__)

RENORMALIZE_TOLERANCE = 1e-3


def validate_response(probs: np.ndarray, n_windows: int, class_count: int) -> np.ndarray:
    n, k = probs.shape
    if n != n_windows:
        raise ProtocolError(f"window count mismatch: response has {n} vectors for {n_windows} windows")
    if k != class_count:
        raise ProtocolError(f"class count mismatch: response has {k} classes, expected {class_count}")
    probs = probs.astype(np.float64)
    if not np.all(probs >= 0):
        raise ProtocolError("normalization violation: negative or NaN probability")
    sums = probs.sum(axis=1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > RENORMALIZE_TOLERANCE:
        raise ProtocolError(f"normalization violation: vector sum off by {worst:.3g}")
    return probs / sums[:, None]


class ExternalBackend(Backend):
    def __init__(self, command, class_count: int = DEFAULT_CLASS_COUNT):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise BackendError("external backend command is empty")
        self.class_count = class_count
        self._stderr = tempfile.TemporaryFile()
        try:
            self.proc = subprocess.Popen(
                self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=self._stderr,
            )
        except OSError as exc:
            self._stderr.close()
            raise BackendError(f"cannot spawn external backend {self.argv[0]!r}: {exc}") from None

    def _diagnostics(self) -> str:
        try:
            code = self.proc.wait(timeout=1.0)
        except subprocess.TimeoutExpired:
            code = None
        self._stderr.seek(0)
        tail = self._stderr.read()[-2000:].decode("utf-8", "replace").strip()
        status = "still running" if code is None else f"exit status {code}"
        return f"external backend {self.argv[0]!r}: {status}" + (f"; stderr:\n{tail}" if tail else "")

    def infer(self, batch: WindowBatch) -> PredictionSet:
        check_batch(batch)
        try:
            self.proc.stdin.write(protocol.encode_request(batch.windows))
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise BackendError(f"external backend closed its input: {exc}", self._diagnostics()) from None
        try:
            raw = protocol.read_response(self.proc.stdout)
            probs = validate_response(raw, len(batch), self.class_count)
        except ProtocolError as exc:
            raise ProtocolError(str(exc), self._diagnostics()) from None
        return PredictionSet(probs)

    def describe(self) -> dict:
        return {"kind": "external", "command": shlex.join(self.argv)}

    def close(self):
        proc = getattr(self, "proc", None)
        if proc is None:
            return
        try:
            if proc.stdin and not proc.stdin.closed:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5.0)
        except subprocess.TimeoutExpired:
            log.warning("external backend did not exit after stdin closed; killing it")
            proc.kill()
            proc.wait()
        if proc.stdout:
            proc.stdout.close()
        self._stderr.close()
        self.proc = None
