"""Deterministic mock backend driven by synthetic labeled scenes.

A MockScene is an exactly-known arrangement of rectangles and circles,
each carrying a phrase-to-score table.  Every backend capability is
answered from the scene geometry, which makes the scene a pixel-exact
oracle for the whole pipeline.

The mock renders each label with a deterministic color, so an image
crop can be mapped back to the classes it contains without any side
channel -- that is how embed_image works.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .backends import Backend, BackendError
from .core import (
    BBox,
    BinaryMask,
    ImageRaster,
    InstanceMask,
    PointPrompt,
    SimilarityMap,
    mask_bbox,
    mask_union,
)

_UNKNOWN = "<unknown>"


def label_color(label: str) -> Tuple[int, int, int]:
    """Deterministic non-black RGB color for a class label."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    r, g, b = digest[0], digest[1], digest[2]
    if max(r, g, b) < 32:
        r |= 32
    return (r, g, b)


@dataclass(frozen=True)
class Shape:
    kind: str  # "rect" or "circle"
    geom: tuple  # rect: (x0, y0, x1, y1) half-open; circle: (cx, cy, radius)
    label: str
    scores: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("rect", "circle"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if not self.label:
            raise ValueError("shape label must be nonempty")
        object.__setattr__(self, "geom", tuple(int(v) for v in self.geom))
        object.__setattr__(self, "scores", dict(self.scores))

    def rasterize(self, width: int, height: int) -> np.ndarray:
        out = np.zeros((height, width), dtype=bool)
        if self.kind == "rect":
            x0, y0, x1, y1 = self.geom
            out[max(0, y0) : min(height, y1), max(0, x0) : min(width, x1)] = True
        else:
            cx, cy, r = self.geom
            yy, xx = np.mgrid[0:height, 0:width]
            out = (xx - cx) ** 2 + (yy - cy) ** 2 <= r**2
        return out

    @property
    def area(self) -> int:
        if self.kind == "rect":
            x0, y0, x1, y1 = self.geom
            return (x1 - x0) * (y1 - y0)
        return int(self.rasterize(self.geom[0] + self.geom[2] + 1, self.geom[1] + self.geom[2] + 1).sum())


@dataclass(frozen=True)
class MockScene:
    width: int
    height: int
    shapes: tuple

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if self.width < 1 or self.height < 1:
            raise ValueError("scene must be at least 1x1")
        colors = {}
        for s in self.shapes:
            c = label_color(s.label)
            if colors.get(c, s.label) != s.label:
                raise ValueError(f"label color collision between {colors[c]!r} and {s.label!r}")
            colors[c] = s.label

    @classmethod
    def from_json(cls, obj: dict) -> "MockScene":
        shapes = [
            Shape(s["kind"], tuple(s["geom"]), s["label"], dict(s.get("scores", {})))
            for s in obj.get("shapes", [])
        ]
        return cls(int(obj["w"]), int(obj["h"]), tuple(shapes))

    def to_json(self) -> dict:
        return {
            "w": self.width,
            "h": self.height,
            "shapes": [
                {"kind": s.kind, "geom": list(s.geom), "label": s.label, "scores": s.scores}
                for s in self.shapes
            ],
        }

    @classmethod
    def load(cls, path) -> "MockScene":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    def shape_masks(self, width: Optional[int] = None, height: Optional[int] = None) -> List[BinaryMask]:
        w = width or self.width
        h = height or self.height
        return [BinaryMask(s.rasterize(w, h)) for s in self.shapes]

    def class_masks(self, width: Optional[int] = None, height: Optional[int] = None) -> Dict[str, BinaryMask]:
        """Ground-truth mask per label: union of that label's shapes."""
        w = width or self.width
        h = height or self.height
        out: Dict[str, BinaryMask] = {}
        for s, m in zip(self.shapes, self.shape_masks(w, h)):
            out[s.label] = mask_union(out[s.label], m) if s.label in out else m
        return out

    def render(self, width: Optional[int] = None, height: Optional[int] = None) -> ImageRaster:
        """Paint shapes in scene order over black, one color per label."""
        w = width or self.width
        h = height or self.height
        canvas = np.zeros((h, w, 3), dtype=np.uint8)
        for s, m in zip(self.shapes, self.shape_masks(w, h)):
            canvas[m.bits] = label_color(s.label)
        return ImageRaster(canvas)


class EmbeddingSpace:
    """One-hot text basis shared across scenes, plus color-based image embedding.

    Each distinct phrase gets its own basis vector, assigned lazily; an
    image crop embeds as the L2-normalized histogram of class ownership
    over its non-black pixels.
    """

    def __init__(self, dim: int = 128):
        self.dim = dim
        self._index: Dict[str, int] = {_UNKNOWN: 0}
        self._lock = threading.Lock()
        self._color_to_label: Dict[Tuple[int, int, int], str] = {}

    def register_labels(self, labels: Sequence[str]) -> None:
        for label in labels:
            self._phrase_index(label)
            self._color_to_label[label_color(label)] = label

    def _phrase_index(self, phrase: str) -> int:
        with self._lock:
            if phrase not in self._index:
                if len(self._index) >= self.dim:
                    raise BackendError("mock embedding vocabulary overflow")
                self._index[phrase] = len(self._index)
            return self._index[phrase]

    def embed_text(self, phrase: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        vec[self._phrase_index(phrase)] = 1.0
        return vec

    def embed_image(self, crop: ImageRaster) -> np.ndarray:
        px = crop.pixels
        foreground = px.any(axis=2)
        hist = np.zeros(self.dim)
        if foreground.any():
            colors, counts = np.unique(px[foreground].reshape(-1, 3), axis=0, return_counts=True)
            for color, count in zip(colors, counts):
                label = self._color_to_label.get(tuple(int(c) for c in color))
                idx = self._phrase_index(label) if label is not None else 0
                hist[idx] += count
        if not hist.any():
            hist[0] = 1.0
        return hist / np.linalg.norm(hist)


class MockBackend(Backend):
    """Pure function of (scene, request); byte-identical across runs."""

    def __init__(self, scene: MockScene, space: Optional[EmbeddingSpace] = None):
        self.scene = scene
        self.space = space or EmbeddingSpace()
        self.space.register_labels([s.label for s in scene.shapes])
        self._render = scene.render()

    def _check_image(self, image: ImageRaster) -> None:
        if image.width < self.scene.width or image.height < self.scene.height:
            raise BackendError(
                f"image {image.width}x{image.height} smaller than scene "
                f"{self.scene.width}x{self.scene.height}"
            )
        window = image.pixels[: self.scene.height, : self.scene.width]
        if not np.array_equal(window, self._render.pixels):
            raise BackendError("image does not match the configured scene")

    def _masks(self, image: ImageRaster) -> List[BinaryMask]:
        return self.scene.shape_masks(image.width, image.height)

    def detect_boxes(self, image, phrases, box_threshold, text_threshold):
        self._check_image(image)
        masks = self._masks(image)
        out: List[BBox] = []
        for phrase in phrases:
            for shape, mask in zip(self.scene.shapes, masks):
                score = shape.scores.get(phrase)
                if score is None or score < text_threshold:
                    continue
                tight = mask_bbox(mask)
                out.append(BBox(tight.x0, tight.y0, tight.x1, tight.y1, score, phrase))
        return out

    def similarity_map(self, image, phrase):
        self._check_image(image)
        values = np.zeros((image.height, image.width))
        for shape, mask in zip(self.scene.shapes, self._masks(image)):
            score = shape.scores.get(phrase)
            if score is not None:
                values[mask.bits] = np.maximum(values[mask.bits], score)
        return SimilarityMap(values)

    def segment_prompts(self, image, points, boxes):
        if not points and not boxes:
            raise BackendError("segment_prompts requires at least one prompt")
        self._check_image(image)
        masks = self._masks(image)
        out: List[InstanceMask] = []
        for p in points:
            containing = [
                (shape.area, i)
                for i, (shape, m) in enumerate(zip(self.scene.shapes, masks))
                if 0 <= p.y < m.height and 0 <= p.x < m.width and m.bits[p.y, p.x]
            ]
            if containing:
                _, idx = min(containing)
                out.append(InstanceMask(masks[idx], 1.0))
        for box in boxes:
            best_iou = 0.0
            best_idx = None
            for i, m in enumerate(masks):
                if m.is_empty:
                    continue
                iou = box.iou(mask_bbox(m))
                if iou > best_iou:
                    best_iou = iou
                    best_idx = i
            if best_idx is not None:
                out.append(InstanceMask(masks[best_idx], 1.0))
        return out

    def segment_auto(self, image, grid_n):
        self._check_image(image)
        return [InstanceMask(m, 1.0) for m in self._masks(image) if not m.is_empty]

    def embed_image(self, crop):
        return self.space.embed_image(crop)

    def embed_texts(self, phrases):
        return [self.space.embed_text(p) for p in phrases]


class MockDirectoryBackend(Backend):
    """Routes requests to the scene whose render matches the query image.

    The image may carry black right/bottom padding (from tiling); the
    match requires the top-left window to equal a scene render and all
    padding pixels to be black.
    """

    def __init__(self, scene_dir):
        paths = sorted(Path(scene_dir).glob("*.json"))
        if not paths:
            raise BackendError(f"no scene files in {scene_dir}")
        self.space = EmbeddingSpace()
        self._backends = [MockBackend(MockScene.load(p), self.space) for p in paths]

    def _route(self, image: ImageRaster) -> MockBackend:
        for be in self._backends:
            scene = be.scene
            if image.width < scene.width or image.height < scene.height:
                continue
            px = image.pixels
            if not np.array_equal(px[: scene.height, : scene.width], be._render.pixels):
                continue
            if px[scene.height :, :].any() or px[:, scene.width :].any():
                continue
            return be
        raise BackendError("image does not match any configured scene")

    def detect_boxes(self, image, phrases, box_threshold, text_threshold):
        return self._route(image).detect_boxes(image, phrases, box_threshold, text_threshold)

    def similarity_map(self, image, phrase):
        return self._route(image).similarity_map(image, phrase)

    def segment_prompts(self, image, points, boxes):
        if not points and not boxes:
            raise BackendError("segment_prompts requires at least one prompt")
        return self._route(image).segment_prompts(image, points, boxes)

    def segment_auto(self, image, grid_n):
        return self._route(image).segment_auto(image, grid_n)

    def embed_image(self, crop):
        return self.space.embed_image(crop)

    def embed_texts(self, phrases):
        return [self.space.embed_text(p) for p in phrases]


def generate_scene(
    rng: np.random.Generator,
    width: int = 64,
    height: int = 64,
    labels: Sequence[str] = ("building", "car", "tree"),
    scores: Optional[Dict[str, Dict[str, float]]] = None,
) -> MockScene:
    """Random non-overlapping scene with one shape per label.

    ``scores`` overrides the per-label phrase table (default: the label
    itself at score 1.0).
    """
    shapes: List[Shape] = []
    occupied = np.zeros((height, width), dtype=bool)
    for label in labels:
        table = (scores or {}).get(label, {label: 1.0})
        for _ in range(200):
            kind = "rect" if rng.integers(2) == 0 else "circle"
            if kind == "rect":
                w = int(rng.integers(4, max(5, width // 3)))
                h = int(rng.integers(4, max(5, height // 3)))
                x0 = int(rng.integers(0, width - w))
                y0 = int(rng.integers(0, height - h))
                shape = Shape("rect", (x0, y0, x0 + w, y0 + h), label, table)
            else:
                r = int(rng.integers(3, max(4, min(width, height) // 6)))
                cx = int(rng.integers(r, width - r))
                cy = int(rng.integers(r, height - r))
                shape = Shape("circle", (cx, cy, r), label, table)
            mask = shape.rasterize(width, height)
            if not (mask & occupied).any():
                occupied |= mask
                shapes.append(shape)
                break
        else:
            raise RuntimeError(f"could not place a shape for {label!r}")
    return MockScene(width, height, tuple(shapes))
