"""Turning text class specifications into visual prompts.

Box prompts come from the open-vocabulary detector, point prompts from
per-phrase similarity maps, and grid points from plain geometry.  When
a class carries synonym phrases, the prompts generated per phrase are
merged: boxes deduplicate at high overlap, points at exact coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

from .core import BBox, ImageRaster, PointPrompt, SimilarityMap, normalize_similarity_map

MAX_SYNONYMS = 10
BOX_DEDUP_IOU = 0.9


@dataclass(frozen=True)
class ClassSpec:
    """A target class: numeric id, display label, augmentation phrases."""

    id: int
    label: str
    synonyms: tuple = ()

    def __post_init__(self):
        if not self.label:
            raise ValueError("class label must be nonempty")
        syn = tuple(self.synonyms)
        if len(syn) > MAX_SYNONYMS:
            raise ValueError(f"at most {MAX_SYNONYMS} synonyms allowed, got {len(syn)}")
        object.__setattr__(self, "synonyms", syn)

    @property
    def phrases(self) -> tuple:
        """Phrases to prompt with: the synonyms, or just the label."""
        return self.synonyms if self.synonyms else (self.label,)

    def without_augmentation(self) -> "ClassSpec":
        return ClassSpec(self.id, self.label, ())


@dataclass(frozen=True)
class VisualPrompt:
    boxes: tuple = ()
    points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "points", tuple(self.points))


@dataclass(frozen=True)
class PointSamplingConfig:
    """Deterministic top-K sampling above a normalized-score threshold."""

    threshold: float = 0.8
    max_points: int = 5

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold {self.threshold} outside [0, 1]")
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")


def generate_box_prompts(
    backend,
    image: ImageRaster,
    spec: ClassSpec,
    box_threshold: float = 0.35,
    text_threshold: float = 0.25,
) -> List[BBox]:
    """Detect once per phrase, filter by score, merge near-duplicates.

    Overlapping detections (IoU > 0.9) collapse to the higher-scoring
    box; on a score tie the earlier phrase in synonym order wins.
    """
    if not (0.0 <= box_threshold <= 1.0 and 0.0 <= text_threshold <= 1.0):
        raise ValueError("thresholds must lie in [0, 1]")
    candidates: List[BBox] = []
    for phrase in spec.phrases:
        detected = backend.detect_boxes(image, [phrase], box_threshold, text_threshold)
        candidates.extend(b for b in detected if b.score >= box_threshold)
    merged: List[BBox] = []
    for box in candidates:
        for i, kept in enumerate(merged):
            if box.iou(kept) > BOX_DEDUP_IOU:
                if box.score > kept.score:
                    merged[i] = box
                break
        else:
            merged.append(box)
    return merged


def sample_point_prompts(s: SimilarityMap, cfg: PointSamplingConfig) -> List[PointPrompt]:
    """Top-K pixels at or above the threshold, by descending score.

    Ties break in row-major order, which makes the result deterministic.
    Expects a normalized map (values in [0, 1]).
    """
    v = s.values
    candidates = []
    ys, xs = (v >= cfg.threshold).nonzero()
    for y, x in zip(ys.tolist(), xs.tolist()):
        candidates.append((-v[y, x], y, x))
    candidates.sort()
    return [PointPrompt(x, y) for _, y, x in candidates[: cfg.max_points]]


def merged_similarity_points(
    backend, image: ImageRaster, spec: ClassSpec, cfg: PointSamplingConfig
) -> List[PointPrompt]:
    """Sample each phrase's normalized map, union points by coordinate."""
    seen = set()
    merged: List[PointPrompt] = []
    for phrase in spec.phrases:
        smap = normalize_similarity_map(backend.similarity_map(image, phrase))
        for p in sample_point_prompts(smap, cfg):
            if (p.x, p.y) not in seen:
                seen.add((p.x, p.y))
                merged.append(p)
    return merged


def grid_points(width: int, height: int, n_per_side: int) -> List[PointPrompt]:
    """n x n points at the centers of a uniform grid, row-major."""
    if n_per_side < 1:
        raise ValueError("n_per_side must be >= 1")
    points = []
    for row in range(n_per_side):
        y = int((row + 0.5) * height / n_per_side)
        for col in range(n_per_side):
            x = int((col + 0.5) * width / n_per_side)
            points.append(PointPrompt(x, y))
    return points
