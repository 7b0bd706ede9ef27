"""Image decoding, bilinear rescaling and multi-scale window extraction.

Images are held as read-only ``float32`` arrays of shape ``(height, width, 3)``
with every sample normalized to ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DecodeError

DEFAULT_SCALES = (1 / math.sqrt(2), 1.0, math.sqrt(2))
DEFAULT_WINDOW = 224
DEFAULT_STRIDE = 112


@dataclass(frozen=True)
class Image:
    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) pixels, got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if px.size and (px.min() < 0 or px.max() > 1):
            raise ValueError("pixel values must lie in [0, 1]")
        if px.flags.writeable:
            px = px.copy()
            px.flags.writeable = False
            object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class ScaleSet:
    factors: tuple = DEFAULT_SCALES

    def __post_init__(self):
        factors = tuple(float(f) for f in self.factors)
        if not factors:
            raise ValueError("scale set must not be empty")
        for f in factors:
            if not (f > 0 and math.isfinite(f)):
                raise ValueError(f"scale factors must be positive, got {f!r}")
        object.__setattr__(self, "factors", factors)

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)


@dataclass(frozen=True)
class WindowSpec:
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE

    def __post_init__(self):
        if int(self.window) < 1 or int(self.stride) < 1:
            raise ValueError(f"window and stride must be >= 1, got {self.window}/{self.stride}")


@dataclass
class WindowBatch:
    """Every window cut from one image's scale pyramid.

    ``windows`` is a contiguous ``(N, window, window, 3)`` float32 array, so it
    can be handed to a backend as a single invocation.
    """

    source: str
    windows: np.ndarray
    per_scale_counts: list = field(default_factory=list)

    def __len__(self):
        return self.windows.shape[0]

    @property
    def window_side(self) -> int:
        return self.windows.shape[1]


# -- decoding -----------------------------------------------------------------

_PNM_MAGIC = {b"P5": 1, b"P6": 3}


def _pnm_header(data: bytes, path):
    """Parse a binary PNM header; return (magic, width, height, maxval, offset)."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise DecodeError(path, "truncated header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or not data[pos : pos + 1].isspace():
        raise DecodeError(path, "truncated header")
    pos += 1
    magic = tokens[0]
    if magic not in _PNM_MAGIC:
        raise DecodeError(path, f"unsupported PNM type {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DecodeError(path, "non-numeric header field") from None
    if width < 1 or height < 1 or not (1 <= maxval <= 65535):
        raise DecodeError(path, f"bad header values {width}x{height} maxval={maxval}")
    return magic, width, height, maxval, pos


def decode_pnm_bytes(data: bytes, path="<bytes>") -> Image:
    magic, width, height, maxval, offset = _pnm_header(data, path)
    channels = _PNM_MAGIC[magic]
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    need = count * dtype.itemsize
    if len(data) - offset < need:
        raise DecodeError(path, f"truncated payload ({len(data) - offset} of {need} bytes)")
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    px = raw.astype(np.float32).reshape(height, width, channels) / np.float32(maxval)
    if (raw > maxval).any():
        raise DecodeError(path, "sample exceeds maxval")
    if channels == 1:
        px = np.repeat(px, 3, axis=2)
    return Image(px)


def _decode_with_pillow(path: Path) -> Image:
    try:
        from PIL import Image as PILImage
    except ImportError:  # pragma: no cover - depends on environment
        raise DecodeError(path, "format needs Pillow, which is not installed") from None
    try:
        with PILImage.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.float32) / np.float32(255)
    except Exception as exc:
        raise DecodeError(path, str(exc)) from None
    return Image(rgb)


def decode_image(path) -> Image:
    """Decode ``path`` into a normalized RGB image.

    Binary PPM (P6) and PGM (P5) are handled natively; grayscale is
    replicated across the three channels. JPEG and PNG go through Pillow when
    it is importable.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DecodeError(path, exc.strerror or str(exc)) from None
    if data[:2] in _PNM_MAGIC:
        return decode_pnm_bytes(data, path)
    if path.suffix.lower() in (".jpg", ".jpeg", ".png"):
        return _decode_with_pillow(path)
    raise DecodeError(path, "unrecognized image format")


def encode_ppm(pixels: np.ndarray) -> bytes:
    """Serialize a ``(height, width, 3)`` uint8 array as binary P6."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w, _ = pixels.shape
    return b"P6\n%d %d\n255\n" % (w, h) + pixels.tobytes()


# -- scaling ------------------------------------------------------------------

def scaled_dim(length: int, factor: float) -> int:
    """Round ``length * factor`` half away from zero, never below 1."""
    return max(1, math.floor(length * factor + 0.5))


def _bilinear_axis(n_in: int, n_out: int):
    # pixel-center alignment, clamped to the source edge
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    x = np.clip(x, 0.0, n_in - 1)
    lo = np.floor(x).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = (x - lo).astype(np.float32)
    return lo, hi, frac


def scale_image(img: Image, factor: float) -> Image:
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor!r}")
    if factor == 1.0:
        return img
    out_h = scaled_dim(img.height, factor)
    out_w = scaled_dim(img.width, factor)
    src = img.pixels
    y0, y1, fy = _bilinear_axis(img.height, out_h)
    x0, x1, fx = _bilinear_axis(img.width, out_w)
    fy = fy[:, None, None]
    rows = src[y0] * (1 - fy) + src[y1] * fy
    fx = fx[None, :, None]
    out = rows[:, x0] * (1 - fx) + rows[:, x1] * fx
    np.clip(out, 0.0, 1.0, out=out)
    return Image(out)


# -- windowing ----------------------------------------------------------------

def window_offsets(length: int, window: int, stride: int) -> list[int]:
    """Start offsets along one axis; a short axis yields the single offset 0."""
    if length <= window:
        return [0]
    return [i * stride for i in range((length - window) // stride + 1)]


def _pad_to_window(px: np.ndarray, window: int) -> np.ndarray:
    h, w, _ = px.shape
    pad_h = max(0, window - h)
    pad_w = max(0, window - w)
    if not (pad_h or pad_w):
        return px
    return np.pad(
        px,
        ((pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2), (0, 0)),
        mode="edge",
    )


def generate_windows(img: Image, spec: WindowSpec) -> np.ndarray:
    """Crop every ``window``-sided square at stride offsets, y-outer order.

    Returns an ``(N, window, window, 3)`` array of copies.
    """
    window, stride = int(spec.window), int(spec.stride)
    px = _pad_to_window(img.pixels, window)
    ys = window_offsets(px.shape[0], window, stride)
    xs = window_offsets(px.shape[1], window, stride)
    out = np.empty((len(ys) * len(xs), window, window, 3), dtype=np.float32)
    k = 0
    for y in ys:
        for x in xs:
            out[k] = px[y : y + window, x : x + window]
            k += 1
    return out


def build_batch(img: Image, scales: Sequence[float] | ScaleSet, spec: WindowSpec, source="") -> WindowBatch:
    parts = []
    counts = []
    for factor in scales:
        wins = generate_windows(scale_image(img, factor), spec)
        parts.append(wins)
        counts.append((factor, wins.shape[0]))
    windows = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=0)
    return WindowBatch(source=str(source), windows=windows, per_scale_counts=counts)
