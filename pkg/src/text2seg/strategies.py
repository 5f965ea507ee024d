"""The five pipeline strategies, the embedding filter, and the baseline.

Strategy compositions:
  s1  detector boxes -> segmenter, union of masks
  s2  similarity-map points -> segmenter, union of masks
  s3  automatic gallery -> embedding filter, union of survivors
  s4  union of s1 and s2
  s5  s4's candidate masks passed through the embedding filter

Every run is deterministic given (backend, image, spec, params, seed)
and yields a full trace for the workbench.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .backends import Backend, BackendError, Capability
from .core import (
    BinaryMask,
    ImageRaster,
    InstanceMask,
    PointPrompt,
    SimilarityMap,
    crop_to_bbox,
    mask_union,
    normalize_similarity_map,
    rle_encode,
)
from .promptgen import (
    ClassSpec,
    PointSamplingConfig,
    VisualPrompt,
    generate_box_prompts,
    sample_point_prompts,
)
from . import wire


class StrategyId(str, enum.Enum):
    S1_BOX_PROMPTED = "s1"
    S2_POINT_PROMPTED = "s2"
    S3_GALLERY_FILTERED = "s3"
    S4_BOX_PLUS_POINT = "s4"
    S5_ALL = "s5"


STRATEGY_DESCRIPTIONS = {
    StrategyId.S1_BOX_PROMPTED: "detector boxes prompting the segmenter",
    StrategyId.S2_POINT_PROMPTED: "similarity-map points prompting the segmenter",
    StrategyId.S3_GALLERY_FILTERED: "automatic gallery filtered by text-image embeddings",
    StrategyId.S4_BOX_PLUS_POINT: "union of the box- and point-prompted runs",
    StrategyId.S5_ALL: "box- and point-prompted masks filtered by embeddings",
}

REQUIRED_CAPABILITIES = {
    StrategyId.S1_BOX_PROMPTED: frozenset({Capability.DETECT, Capability.SEGMENT_PROMPTS}),
    StrategyId.S2_POINT_PROMPTED: frozenset({Capability.SIMILARITY, Capability.SEGMENT_PROMPTS}),
    StrategyId.S3_GALLERY_FILTERED: frozenset(
        {Capability.SEGMENT_AUTO, Capability.EMBED_IMAGE, Capability.EMBED_TEXT}
    ),
}
REQUIRED_CAPABILITIES[StrategyId.S4_BOX_PLUS_POINT] = (
    REQUIRED_CAPABILITIES[StrategyId.S1_BOX_PROMPTED]
    | REQUIRED_CAPABILITIES[StrategyId.S2_POINT_PROMPTED]
)
REQUIRED_CAPABILITIES[StrategyId.S5_ALL] = REQUIRED_CAPABILITIES[StrategyId.S4_BOX_PLUS_POINT] | frozenset(
    {Capability.EMBED_IMAGE, Capability.EMBED_TEXT}
)


@dataclass(frozen=True)
class FilterConfig:
    """Embedding-filter setup: contrast phrases and argmax selection."""

    background_phrases: tuple = ("background", "other object")

    def __post_init__(self):
        phrases = tuple(self.background_phrases)
        if not phrases:
            raise ValueError("at least one background phrase is required")
        object.__setattr__(self, "background_phrases", phrases)


@dataclass(frozen=True)
class StrategyParams:
    box_threshold: float = 0.35
    text_threshold: float = 0.25
    point_sampling: PointSamplingConfig = field(default_factory=PointSamplingConfig)
    grid_n: int = 16
    filter: FilterConfig = field(default_factory=FilterConfig)
    # alternative s5 dataflow: filter a fresh automatic gallery instead
    # of the s4 candidates (no fidelity claim either way)
    s5_fresh_gallery: bool = False


@dataclass(frozen=True)
class GalleryVerdict:
    index: int
    selected: bool
    score: Optional[float] = None
    note: Optional[str] = None


@dataclass(frozen=True)
class FilterResult:
    selected: tuple
    verdicts: tuple


@dataclass(frozen=True)
class StrategyTrace:
    strategy: StrategyId
    spec: ClassSpec
    prompt: VisualPrompt
    similarity_maps: tuple  # (phrase, SimilarityMap) pairs consulted
    gallery: tuple  # InstanceMask candidates seen by the filter
    verdicts: tuple  # GalleryVerdict per gallery entry
    final: BinaryMask

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "class": {"id": self.spec.id, "label": self.spec.label, "synonyms": list(self.spec.synonyms)},
            "prompt": {
                "boxes": [wire.box_to_json(b) for b in self.prompt.boxes],
                "points": [wire.point_to_json(p) for p in self.prompt.points],
            },
            "similarity_maps": [
                {
                    "phrase": phrase,
                    "w": smap.width,
                    "h": smap.height,
                    "values_f32_b64": wire.floats_to_b64(smap.values),
                }
                for phrase, smap in self.similarity_maps
            ],
            "gallery": [
                {
                    "rle": wire.rle_to_json(rle_encode(inst.mask)),
                    "confidence": inst.confidence,
                    "selected": v.selected,
                    "score": v.score,
                    "note": v.note,
                }
                for inst, v in zip(self.gallery, self.verdicts)
            ],
            "final_rle": wire.rle_to_json(rle_encode(self.final)),
        }


def _require(backend: Backend, strategy: StrategyId) -> None:
    missing = REQUIRED_CAPABILITIES[strategy] - backend.capabilities
    if missing:
        raise BackendError(
            f"{strategy.value}: backend lacks capabilities "
            + ", ".join(sorted(c.value for c in missing))
        )


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except BackendError as exc:
        raise BackendError(f"[{stage}] {exc}") from exc


def _union(width: int, height: int, masks: Sequence[BinaryMask]) -> BinaryMask:
    out = BinaryMask.zeros(width, height)
    for m in masks:
        out = mask_union(out, m)
    return out


def _best_instance(instances: Sequence[InstanceMask]) -> Optional[InstanceMask]:
    best = None
    for inst in instances:
        if best is None or inst.confidence > best.confidence:
            best = inst
    return best


def clip_filter_gallery(
    backend: Backend,
    image: ImageRaster,
    gallery: Sequence[InstanceMask],
    spec: ClassSpec,
    cfg: FilterConfig,
) -> FilterResult:
    """Keep instances whose crop embedding argmaxes onto a class phrase.

    Each crop is compared against the class phrases plus the background
    phrases; argmax decides, with ties resolved toward non-selection.
    """
    if not gallery:
        return FilterResult((), ())
    phrases = list(spec.phrases) + list(cfg.background_phrases)
    text_embs = _staged("embed_text", backend.embed_texts, phrases)
    n_class = len(spec.phrases)
    selected: List[InstanceMask] = []
    verdicts: List[GalleryVerdict] = []
    for i, inst in enumerate(gallery):
        if inst.mask.is_empty:
            verdicts.append(GalleryVerdict(i, False, None, "empty mask, skipped"))
            continue
        crop = crop_to_bbox(image, inst.mask)
        emb = _staged("embed_image", backend.embed_image, crop)
        sims = [float(np.dot(emb, t)) for t in text_embs]
        best_class = max(sims[:n_class])
        best_background = max(sims[n_class:])
        keep = best_class > best_background
        verdicts.append(GalleryVerdict(i, keep, best_class))
        if keep:
            selected.append(inst)
    return FilterResult(tuple(selected), tuple(verdicts))


def _box_prompted_masks(backend, image, spec, params) -> Tuple[list, list]:
    """s1 core: one segmenter call per detector box."""
    boxes = _staged(
        "detect", generate_box_prompts, backend, image, spec, params.box_threshold, params.text_threshold
    )
    masks: List[BinaryMask] = []
    for box in boxes:
        instances = _staged("segment", backend.segment_prompts, image, [], [box])
        best = _best_instance(instances)
        if best is not None:
            masks.append(best.mask)
    return boxes, masks


def _point_prompted_masks(backend, image, spec, params) -> Tuple[list, list, list]:
    """s2 core: one batched segmenter call over all merged points."""
    consulted = []
    for phrase in spec.phrases:
        smap = _staged("similarity", backend.similarity_map, image, phrase)
        consulted.append((phrase, normalize_similarity_map(smap)))
    # same merge as merged_similarity_points, reusing the maps already fetched
    seen = set()
    points = []
    for _, smap in consulted:
        for p in sample_point_prompts(smap, params.point_sampling):
            if (p.x, p.y) not in seen:
                seen.add((p.x, p.y))
                points.append(p)
    masks: List[BinaryMask] = []
    if points:
        instances = _staged("segment", backend.segment_prompts, image, points, [])
        masks = [inst.mask for inst in instances]
    return points, masks, consulted


def run_strategy(
    backend: Backend,
    image: ImageRaster,
    spec: ClassSpec,
    strategy: StrategyId,
    params: Optional[StrategyParams] = None,
) -> StrategyTrace:
    """Run one strategy end to end; empty prompts yield an empty mask."""
    params = params or StrategyParams()
    _require(backend, strategy)
    w, h = image.width, image.height
    boxes: list = []
    points: list = []
    consulted: list = []
    gallery: tuple = ()
    verdicts: tuple = ()

    if strategy == StrategyId.S1_BOX_PROMPTED:
        boxes, masks = _box_prompted_masks(backend, image, spec, params)
        final = _union(w, h, masks)
    elif strategy == StrategyId.S2_POINT_PROMPTED:
        points, masks, consulted = _point_prompted_masks(backend, image, spec, params)
        final = _union(w, h, masks)
    elif strategy == StrategyId.S3_GALLERY_FILTERED:
        instances = _staged("segment_auto", backend.segment_auto, image, params.grid_n)
        result = clip_filter_gallery(backend, image, instances, spec, params.filter)
        gallery = tuple(instances)
        verdicts = result.verdicts
        final = _union(w, h, [inst.mask for inst in result.selected])
    elif strategy == StrategyId.S4_BOX_PLUS_POINT:
        boxes, box_masks = _box_prompted_masks(backend, image, spec, params)
        points, point_masks, consulted = _point_prompted_masks(backend, image, spec, params)
        final = _union(w, h, box_masks + point_masks)
    elif strategy == StrategyId.S5_ALL:
        boxes, box_masks = _box_prompted_masks(backend, image, spec, params)
        points, point_masks, consulted = _point_prompted_masks(backend, image, spec, params)
        if params.s5_fresh_gallery:
            candidates = _staged("segment_auto", backend.segment_auto, image, params.grid_n)
        else:
            candidates = [InstanceMask(m, 1.0) for m in box_masks + point_masks]
        result = clip_filter_gallery(backend, image, candidates, spec, params.filter)
        gallery = tuple(candidates)
        verdicts = result.verdicts
        final = _union(w, h, [inst.mask for inst in result.selected])
    else:  # pragma: no cover
        raise ValueError(f"unknown strategy {strategy}")

    return StrategyTrace(
        strategy=strategy,
        spec=spec,
        prompt=VisualPrompt(tuple(boxes), tuple(points)),
        similarity_maps=tuple(consulted),
        gallery=gallery,
        verdicts=verdicts,
        final=final,
    )


def run_baseline(backend: Backend, image: ImageRaster, seed: int) -> BinaryMask:
    """Unprompted baseline: one seeded random point into the segmenter.

    Returns the highest-confidence mask, or an empty mask when the
    point hits nothing.
    """
    rng = np.random.default_rng(seed)
    x = int(rng.integers(0, image.width))
    y = int(rng.integers(0, image.height))
    instances = _staged(
        "segment", backend.segment_prompts, image, [PointPrompt(x, y)], []
    )
    best = _best_instance(instances)
    if best is None:
        return BinaryMask.zeros(image.width, image.height)
    return best.mask
