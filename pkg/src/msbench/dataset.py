"""Dataset discovery, layout validation and synthetic dataset generation.

A dataset is a root directory whose immediate subdirectories are material
categories, each holding image files (the MINC-2500 layout).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DatasetError, DecodeError, EmptyDatasetError
from .imaging import decode_image, encode_ppm

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = frozenset({".ppm", ".pgm", ".jpg", ".jpeg", ".png"})

MINC_CATEGORIES = (
    "brick", "carpet", "ceramic", "fabric", "foliage", "food", "glass", "hair",
    "leather", "metal", "mirror", "other", "painted", "paper", "plastic",
    "polishedstone", "skin", "sky", "stone", "tile", "wallpaper", "water", "wood",
)
MINC_IMAGES_PER_CATEGORY = 2500
MINC_IMAGE_SIDE = 362


@dataclass(frozen=True)
class CategoryDir:
    name: str
    images: tuple

    @property
    def count(self) -> int:
        return len(self.images)


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    directories: tuple

    @property
    def total_images(self) -> int:
        return sum(d.count for d in self.directories)

    def __iter__(self):
        return iter(self.directories)


@dataclass(frozen=True)
class LayoutExpectation:
    expected_categories: Optional[int] = len(MINC_CATEGORIES)
    expected_per_category: Optional[int] = MINC_IMAGES_PER_CATEGORY
    expected_dims: Optional[tuple] = (MINC_IMAGE_SIDE, MINC_IMAGE_SIDE)

    def __post_init__(self):
        for value in (self.expected_categories, self.expected_per_category):
            if value is not None and value < 1:
                raise ValueError(f"expected counts must be positive, got {value}")
        if self.expected_dims is not None and min(self.expected_dims) < 1:
            raise ValueError(f"expected dims must be positive, got {self.expected_dims}")

    @classmethod
    def vacuous(cls):
        return cls(None, None, None)


@dataclass(frozen=True)
class Violation:
    kind: str  # "category_count" | "per_category_count" | "dims" | "decode"
    directory: Optional[str]
    detail: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def conformant(self) -> bool:
        return not self.violations


def _bytes_key(name: str) -> bytes:
    return os.fsencode(name)


def _is_image(entry: os.DirEntry) -> bool:
    return entry.is_file() and os.path.splitext(entry.name)[1].lower() in IMAGE_EXTENSIONS


def scan_dataset(root) -> DatasetManifest:
    """List every category subdirectory of ``root`` holding at least one image.

    Files directly under ``root`` are ignored, as is anything nested more
    than one level down. Directories and files are sorted by their byte
    representation so repeated runs visit images in the same order.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist or is not a directory")
    try:
        subdirs = [e for e in os.scandir(root) if e.is_dir()]
    except OSError as exc:
        raise DatasetError(f"cannot read dataset root {root}: {exc}") from None

    directories = []
    for sub in sorted(subdirs, key=lambda e: _bytes_key(e.name)):
        try:
            entries = list(os.scandir(sub.path))
        except OSError as exc:
            raise DatasetError(f"cannot read category directory {sub.path}: {exc}") from None
        images = sorted((e for e in entries if _is_image(e)), key=lambda e: _bytes_key(e.name))
        nested = [e.name for e in entries if e.is_dir()]
        if nested:
            log.warning("ignoring %d nested directories under %s", len(nested), sub.path)
        if images:
            directories.append(CategoryDir(sub.name, tuple(Path(e.path) for e in images)))

    manifest = DatasetManifest(root, tuple(directories))
    if manifest.total_images == 0:
        raise EmptyDatasetError(f"empty dataset: no image files under {root}")
    return manifest


def validate_layout(manifest: DatasetManifest, expect: LayoutExpectation) -> ValidationReport:
    report = ValidationReport()
    dirs = manifest.directories
    if expect.expected_categories is not None and len(dirs) != expect.expected_categories:
        report.violations.append(Violation(
            "category_count", None,
            f"found {len(dirs)} categories, expected {expect.expected_categories}",
        ))
    for d in dirs:
        if expect.expected_per_category is not None and d.count != expect.expected_per_category:
            report.violations.append(Violation(
                "per_category_count", d.name,
                f"{d.count} images, expected {expect.expected_per_category}",
            ))
        if expect.expected_dims is not None and d.images:
            try:
                img = decode_image(d.images[0])
            except DecodeError as exc:
                report.violations.append(Violation("decode", d.name, str(exc)))
                continue
            want_w, want_h = expect.expected_dims
            if (img.width, img.height) != (want_w, want_h):
                report.violations.append(Violation(
                    "dims", d.name,
                    f"{d.images[0].name} is {img.width}x{img.height}, expected {want_w}x{want_h}",
                ))
    return report


@dataclass(frozen=True)
class SyntheticSpec:
    categories: int = len(MINC_CATEGORIES)
    images_per_category: int = 10
    width: int = MINC_IMAGE_SIDE
    height: int = MINC_IMAGE_SIDE

    def __post_init__(self):
        for name in ("categories", "images_per_category", "width", "height"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def category_names(n: int) -> list[str]:
    """MINC category names when they suffice, otherwise numbered names."""
    if n <= len(MINC_CATEGORIES):
        return list(MINC_CATEGORIES[:n])
    width = len(str(n - 1))
    return [f"category_{i:0{width}d}" for i in range(n)]


def synthetic_pixels(seed: int, category: int, index: int, width: int, height: int) -> np.ndarray:
    rng = np.random.default_rng([seed, category, index])
    # coarse noise upsampled by repetition gives blocky structure rather than pure static
    block = 8
    coarse = rng.integers(0, 256, size=(-(-height // block), -(-width // block), 3), dtype=np.uint8)
    fine = rng.integers(-16, 17, size=(height, width, 3), dtype=np.int16)
    px = np.repeat(np.repeat(coarse, block, axis=0), block, axis=1)[:height, :width]
    return np.clip(px.astype(np.int16) + fine, 0, 255).astype(np.uint8)


def gen_synthetic_dataset(spec: SyntheticSpec, seed: int, out_root) -> DatasetManifest:
    out_root = Path(out_root)
    try:
        for ci, name in enumerate(category_names(spec.categories)):
            cat_dir = out_root / name
            cat_dir.mkdir(parents=True, exist_ok=True)
            for ii in range(spec.images_per_category):
                px = synthetic_pixels(seed, ci, ii, spec.width, spec.height)
                (cat_dir / f"{name}_{ii:06d}.ppm").write_bytes(encode_ppm(px))
    except OSError as exc:
        raise OSError(f"cannot write synthetic dataset under {out_root}: {exc}") from exc
    return scan_dataset(out_root)
