"""Local dataset ingestion: manifests, ground truth, tiling, stitching.

Large frames are padded on the right/bottom to a multiple of the tile
size and cut into a ceil-grid of tiles; stitching drops the padding so
tile -> stitch is the identity.  Padded ground truth is forced into the
ignore mask so padding never biases metrics.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from .core import BinaryMask, ImageRaster
from .promptgen import ClassSpec


class ManifestError(ValueError):
    pass


class GroundTruthError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetItem:
    image: Path
    gt: Optional[Path] = None


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    tile_size: int
    ignore_index: int
    classes: tuple  # ClassSpec, ids dense from 0
    items: tuple  # DatasetItem
    palette: Optional[dict] = None  # (r, g, b) -> class id or ignore_index

    def __post_init__(self):
        if self.tile_size < 1:
            raise ManifestError("tile_size must be >= 1")
        ids = sorted(c.id for c in self.classes)
        if ids != list(range(len(self.classes))):
            raise ManifestError(f"class ids must be dense from 0, got {ids}")
        if self.palette is not None:
            targets = list(self.palette.values())
            if len(set(self.palette)) != len(self.palette):
                raise ManifestError("palette colors must be unique")
            valid = set(ids) | {self.ignore_index}
            bad = [t for t in targets if t not in valid]
            if bad:
                raise ManifestError(f"palette maps to unknown class ids {bad}")

    def class_by_id(self, class_id: int) -> ClassSpec:
        for c in self.classes:
            if c.id == class_id:
                return c
        raise KeyError(class_id)


def load_manifest(path) -> DatasetManifest:
    """Load a manifest JSON; item paths resolve relative to the file."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    try:
        classes = tuple(
            ClassSpec(int(c["id"]), c["label"], tuple(c.get("synonyms", [])))
            for c in obj["classes"]
        )
        palette = None
        if obj.get("palette"):
            palette = {}
            for key, cid in obj["palette"].items():
                r, g, b = (int(v) for v in key.split(","))
                palette[(r, g, b)] = int(cid)
        items = tuple(
            DatasetItem(
                base / it["image"],
                base / it["gt"] if it.get("gt") else None,
            )
            for it in obj.get("items", [])
        )
        return DatasetManifest(
            name=obj["name"],
            tile_size=int(obj["tile_size"]),
            ignore_index=int(obj.get("ignore_index", 255)),
            classes=classes,
            items=items,
            palette=palette,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"malformed manifest {path}: {exc}") from exc


@dataclass(frozen=True)
class TileGrid:
    width: int
    height: int
    tile_size: int

    @property
    def columns(self) -> int:
        return -(-self.width // self.tile_size)

    @property
    def rows(self) -> int:
        return -(-self.height // self.tile_size)

    @property
    def padded_width(self) -> int:
        return self.columns * self.tile_size

    @property
    def padded_height(self) -> int:
        return self.rows * self.tile_size


def _tile_array(arr: np.ndarray, tile: int, pad_value) -> List[np.ndarray]:
    h, w = arr.shape[:2]
    ph = (-h) % tile
    pw = (-w) % tile
    pad_spec = [(0, ph), (0, pw)] + [(0, 0)] * (arr.ndim - 2)
    padded = np.pad(arr, pad_spec, constant_values=pad_value)
    tiles = []
    for row in range(padded.shape[0] // tile):
        for col in range(padded.shape[1] // tile):
            tiles.append(padded[row * tile : (row + 1) * tile, col * tile : (col + 1) * tile])
    return tiles


def tile_image(
    img: ImageRaster, tile_size: int, pad_rgb: Tuple[int, int, int] = (0, 0, 0)
) -> Tuple[TileGrid, List[ImageRaster]]:
    """Pad to a tile multiple and emit row-major tiles."""
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    grid = TileGrid(img.width, img.height, tile_size)
    if pad_rgb == (0, 0, 0):
        tiles = _tile_array(np.asarray(img.pixels), tile_size, 0)
    else:
        h, w = img.height, img.width
        canvas = np.empty((grid.padded_height, grid.padded_width, 3), dtype=np.uint8)
        canvas[:, :] = pad_rgb
        canvas[:h, :w] = img.pixels
        tiles = _tile_array(canvas, tile_size, 0)
    return grid, [ImageRaster(t) for t in tiles]


def tile_mask(m: BinaryMask, tile_size: int) -> Tuple[TileGrid, List[BinaryMask]]:
    grid = TileGrid(m.width, m.height, tile_size)
    return grid, [BinaryMask(t) for t in _tile_array(np.asarray(m.bits), tile_size, False)]


def stitch(grid: TileGrid, tile_masks: Sequence[BinaryMask]) -> BinaryMask:
    """Reassemble tiles row-major and drop the padded margin."""
    expected = grid.columns * grid.rows
    if len(tile_masks) != expected:
        raise ValueError(f"expected {expected} tiles, got {len(tile_masks)}")
    t = grid.tile_size
    canvas = np.zeros((grid.padded_height, grid.padded_width), dtype=bool)
    for i, m in enumerate(tile_masks):
        if (m.height, m.width) != (t, t):
            raise ValueError(f"tile {i} is {m.width}x{m.height}, expected {t}x{t}")
        row, col = divmod(i, grid.columns)
        canvas[row * t : (row + 1) * t, col * t : (col + 1) * t] = m.bits
    return BinaryMask(canvas[: grid.height, : grid.width])


def decode_gt(
    raster: np.ndarray, manifest: DatasetManifest
) -> Tuple[Dict[int, BinaryMask], BinaryMask]:
    """Decode a ground-truth raster into per-class masks plus ignore.

    Accepts an (h, w) class-index array or an (h, w, 3) RGB array that
    maps through the manifest palette.  Any unmapped value is an error
    naming the value and the first offending pixel.
    """
    arr = np.asarray(raster)
    if arr.ndim == 3 and arr.shape[2] == 3:
        if manifest.palette is None:
            raise GroundTruthError("RGB ground truth requires a palette in the manifest")
        index = np.full(arr.shape[:2], -1, dtype=np.int32)
        for (r, g, b), cid in manifest.palette.items():
            index[(arr[:, :, 0] == r) & (arr[:, :, 1] == g) & (arr[:, :, 2] == b)] = cid
        if (index == -1).any():
            ys, xs = (index == -1).nonzero()
            y, x = int(ys[0]), int(xs[0])
            raise GroundTruthError(
                f"unknown ground-truth color {tuple(int(v) for v in arr[y, x])} at ({x},{y})"
            )
    elif arr.ndim == 2:
        index = arr.astype(np.int32)
        valid = {c.id for c in manifest.classes} | {manifest.ignore_index}
        present = set(np.unique(index).tolist())
        unknown = present - valid
        if unknown:
            value = sorted(unknown)[0]
            ys, xs = (index == value).nonzero()
            raise GroundTruthError(
                f"unknown ground-truth index {value} at ({int(xs[0])},{int(ys[0])})"
            )
    else:
        raise GroundTruthError(f"unsupported ground-truth array shape {arr.shape}")
    ignore = BinaryMask(index == manifest.ignore_index)
    masks = {c.id: BinaryMask(index == c.id) for c in manifest.classes}
    return masks, ignore


def load_image(path) -> ImageRaster:
    with Image.open(path) as im:
        return ImageRaster(np.asarray(im.convert("RGB")))


def load_gt_raster(path) -> np.ndarray:
    """Load ground truth preserving its mode: indexed stays 2-D."""
    with Image.open(path) as im:
        if im.mode in ("P", "L"):
            return np.asarray(im.convert("L"))
        return np.asarray(im.convert("RGB"))
