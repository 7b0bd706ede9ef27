"""Binary request/response framing for external backends.

All integers are little-endian u32 and all payload values float32::

    request:  b"MSB1" N w C   then N*C*w*w values (window, channel, row, col)
    response: b"MSR1" N K     then N*K probabilities
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from ..errors import ProtocolError

REQUEST_MAGIC = b"MSB1"
RESPONSE_MAGIC = b"MSR1"
HEADER = struct.Struct("<4sIII")
RESPONSE_HEADER = struct.Struct("<4sII")
CHANNELS = 3
_F32 = np.dtype("<f4")


def request_size(n_windows: int, side: int, channels: int = CHANNELS) -> int:
    return HEADER.size + n_windows * channels * side * side * _F32.itemsize


def encode_request(windows: np.ndarray) -> bytes:
    """Frame an ``(N, w, w, 3)`` window array (channels-last) as a request."""
    n, h, w, c = windows.shape
    if h != w:
        raise ValueError(f"windows must be square, got {h}x{w}")
    planar = np.ascontiguousarray(windows.transpose(0, 3, 1, 2), dtype=_F32)
    return HEADER.pack(REQUEST_MAGIC, n, w, c) + planar.tobytes()


def read_exact(stream: BinaryIO, size: int, what: str) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            got = size - remaining
            raise ProtocolError(f"truncated {what}: got {got} of {size} bytes")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_request(stream: BinaryIO):
    """Read one request; returns the ``(N, w, w, 3)`` windows, or None at clean EOF."""
    head = stream.read(HEADER.size)
    if not head:
        return None
    if len(head) < HEADER.size:
        head += read_exact(stream, HEADER.size - len(head), "request")
    magic, n, side, channels = HEADER.unpack(head)
    if magic != REQUEST_MAGIC:
        raise ProtocolError(f"bad request magic {magic!r}")
    if channels != CHANNELS:
        raise ProtocolError(f"expected {CHANNELS} channels, got {channels}")
    body = read_exact(stream, n * channels * side * side * _F32.itemsize, "request")
    planar = np.frombuffer(body, dtype=_F32).reshape(n, channels, side, side)
    return planar.transpose(0, 2, 3, 1)


def encode_response(probs: np.ndarray) -> bytes:
    n, k = probs.shape
    return RESPONSE_HEADER.pack(RESPONSE_MAGIC, n, k) + np.ascontiguousarray(probs, dtype=_F32).tobytes()


def read_response(stream: BinaryIO) -> np.ndarray:
    """Read one response frame and return its ``(N, K)`` float32 payload."""
    head = read_exact(stream, RESPONSE_HEADER.size, "response")
    magic, n, k = RESPONSE_HEADER.unpack(head)
    if magic != RESPONSE_MAGIC:
        raise ProtocolError(f"bad response magic {magic!r}")
    body = read_exact(stream, n * k * _F32.itemsize, "response")
    return np.frombuffer(body, dtype=_F32).reshape(n, k)
