"""Raster, mask, and geometry primitives shared by the whole engine.

Coordinate convention: origin at the top-left corner, x grows rightward,
y grows downward.  Boxes are half-open: [x0, x1) x [y0, y1).
All types are immutable after construction and all operations are pure,
so everything here is safe for unrestricted concurrent use.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    """Two rasters/masks that must share dimensions do not."""


@dataclass(frozen=True)
class ImageRaster:
    """8-bit RGB image stored row-major as a (height, width, 3) array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.uint8, copy=True)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected an (h, w, 3) RGB array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Row-major boolean mask over an image of the same dimensions."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool, copy=True)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError(f"expected an (h, w) boolean array, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    @property
    def is_empty(self) -> bool:
        return not self.bits.any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))


@dataclass(frozen=True)
class BBox:
    """Half-open pixel box with the detector score and originating phrase."""

    x0: int
    y0: int
    x1: int
    y1: int
    score: float = 1.0
    phrase: str = ""

    def __post_init__(self):
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"degenerate box ({self.x0},{self.y0},{self.x1},{self.y1})")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def iou(self, other: "BBox") -> float:
        ix0 = max(self.x0, other.x0)
        iy0 = max(self.y0, other.y0)
        ix1 = min(self.x1, other.x1)
        iy1 = min(self.y1, other.y1)
        if ix0 >= ix1 or iy0 >= iy1:
            return 0.0
        inter = (ix1 - ix0) * (iy1 - iy0)
        return inter / (self.area + other.area - inter)


@dataclass(frozen=True)
class PointPrompt:
    """Single point prompt; polarity True marks foreground."""

    x: int
    y: int
    polarity: bool = True

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"negative point coordinate ({self.x},{self.y})")


@dataclass(frozen=True)
class SimilarityMap:
    """Per-pixel alignment score between an image and one text phrase."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected an (h, w) float array, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class InstanceMask:
    """One segmenter output: a binary mask plus its confidence."""

    mask: BinaryMask
    confidence: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class RleMask:
    """Run-length encoded mask over row-major order.

    Counts alternate 0-run, 1-run, 0-run, ...; the leading 0-run may be
    zero (mask starting with a set pixel) but no other count may be.
    """

    width: int
    height: int
    counts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.width < 1 or self.height < 1:
            raise ValueError("mask must be at least 1x1")
        if any(c < 0 for c in counts):
            raise ValueError("negative run length")
        if any(c == 0 for c in counts[1:]):
            raise ValueError("only the leading zero-run may be empty")
        if sum(counts) != self.width * self.height:
            raise ValueError(
                f"run lengths sum to {sum(counts)}, expected {self.width * self.height}"
            )


def mask_union(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    """Pointwise OR of two masks of equal dimensions."""
    _check_same_shape(a, b)
    return BinaryMask(a.bits | b.bits)


def mask_intersection(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    _check_same_shape(a, b)
    return BinaryMask(a.bits & b.bits)


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    _check_same_shape(a, b)
    inter = int((a.bits & b.bits).sum())
    union = int((a.bits | b.bits).sum())
    if union == 0:
        return 1.0
    return inter / union


def rle_encode(m: BinaryMask) -> RleMask:
    """Encode a mask as alternating run lengths, leading 0-run first."""
    flat = m.bits.ravel()
    # run boundaries via the positions where the value changes
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return RleMask(m.width, m.height, tuple(runs))


def rle_decode(r: RleMask) -> BinaryMask:
    """Exact inverse of :func:`rle_encode`."""
    flat = np.zeros(r.width * r.height, dtype=bool)
    pos = 0
    val = False
    for c in r.counts:
        if val:
            flat[pos : pos + c] = True
        pos += c
        val = not val
    return BinaryMask(flat.reshape(r.height, r.width))


def normalize_similarity_map(s: SimilarityMap) -> SimilarityMap:
    """Min-max rescale to [0, 1]; a constant map collapses to all zeros.

    A constant map carries no relative information, so no pixel gets to
    claim a high score.
    """
    v = s.values
    if not np.isfinite(v).all():
        raise ValueError("similarity map contains NaN or infinite values")
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        return SimilarityMap(np.zeros_like(v))
    return SimilarityMap((v - lo) / (hi - lo))


def mask_bbox(m: BinaryMask) -> BBox:
    """Tight half-open bounding box of a nonempty mask."""
    if m.is_empty:
        raise ValueError("empty mask has no bounding box")
    ys, xs = np.nonzero(m.bits)
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def crop_to_bbox(img: ImageRaster, m: BinaryMask) -> ImageRaster:
    """Crop the mask's tight bounding rectangle; off-mask pixels go black."""
    if (img.height, img.width) != (m.height, m.width):
        raise DimensionMismatchError(
            f"image {img.width}x{img.height} vs mask {m.width}x{m.height}"
        )
    box = mask_bbox(m)
    crop = np.array(img.pixels[box.y0 : box.y1, box.x0 : box.x1])
    keep = m.bits[box.y0 : box.y1, box.x0 : box.x1]
    crop[~keep] = 0
    return ImageRaster(crop)


def _check_same_shape(a: BinaryMask, b: BinaryMask) -> None:
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatchError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
