"""Model adapters behind the protocol endpoints.

An Adapter supplies the four model roles (detector, explainer, segmenter,
embedder). `ColorRegionAdapter` is the reference implementation: it treats
each uniformly colored region of the input as one object and derives
deterministic phrase scores from hashes, so the server is fully functional
(and conformance-testable) with no checkpoints on disk. Real vision
models wrap the same interface; register them in ADAPTERS.
"""
import hashlib
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .codecs import ProtocolError

CAPABILITIES = ("detect", "similarity", "segment", "segment_auto", "embed")


class Adapter:
    """Interface the endpoints call; override per model family."""

    capabilities: Tuple[str, ...] = ()
    model_ids: Dict[str, str] = {}

    def detect(self, image, phrases, box_threshold, text_threshold):
        raise ProtocolError("unsupported", "detect not configured")

    def similarity(self, image, phrase):
        raise ProtocolError("unsupported", "similarity not configured")

    def segment(self, image, points, boxes):
        raise ProtocolError("unsupported", "segment not configured")

    def segment_auto(self, image, grid_n):
        raise ProtocolError("unsupported", "segment_auto not configured")

    def embed_image(self, image):
        raise ProtocolError("unsupported", "embed not configured")

    def embed_texts(self, phrases):
        raise ProtocolError("unsupported", "embed not configured")


def _phrase_score(phrase: str, color: Tuple[int, int, int]) -> float:
    digest = hashlib.sha256(f"{phrase}|{color[0]},{color[1]},{color[2]}".encode()).digest()
    return int.from_bytes(digest[:4], "big") / 0xFFFFFFFF


def _bbox(mask: np.ndarray) -> Tuple[int, int, int, int]:
    ys, xs = np.nonzero(mask)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def _bbox_iou(a, b) -> float:
    ix = max(0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    area = lambda r: (r[2] - r[0]) * (r[3] - r[1])
    union = area(a) + area(b) - inter
    return inter / union if union else 0.0


class ColorRegionAdapter(Adapter):
    """Objects are the connected same-color regions of the image.

    Pure black is background. Phrase affinity is a stable hash of
    (phrase, region color): arbitrary as semantics, but deterministic,
    which is all the protocol contract demands of a reference server.
    """

    capabilities = CAPABILITIES
    model_ids = {c: "color-region/1" for c in CAPABILITIES}

    def __init__(self, embed_dim: int = 64):
        self.embed_dim = embed_dim

    def _regions(self, image: np.ndarray) -> List[Tuple[Tuple[int, int, int], np.ndarray]]:
        colors, inverse = np.unique(
            image.reshape(-1, 3), axis=0, return_inverse=True
        )
        out = []
        for i, color in enumerate(colors):
            if not color.any():
                continue  # black background
            mask = (inverse == i).reshape(image.shape[:2])
            out.append((tuple(int(c) for c in color), mask))
        return out

    def detect(self, image, phrases, box_threshold, text_threshold):
        boxes = []
        for phrase in phrases:
            for color, mask in self._regions(image):
                score = _phrase_score(phrase, color)
                if score < max(box_threshold, text_threshold):
                    continue
                x0, y0, x1, y1 = _bbox(mask)
                boxes.append(
                    {"x0": x0, "y0": y0, "x1": x1, "y1": y1,
                     "score": round(score, 6), "phrase": phrase}
                )
        return boxes

    def similarity(self, image, phrase):
        values = np.zeros(image.shape[:2], dtype=np.float32)
        for color, mask in self._regions(image):
            values[mask] = _phrase_score(phrase, color)
        lo, hi = float(values.min()), float(values.max())
        if hi > lo:
            values = (values - lo) / (hi - lo)
        else:
            values = np.zeros_like(values)
        return values

    def segment(self, image, points, boxes):
        regions = self._regions(image)
        instances = []
        for p in points:
            x, y = int(p["x"]), int(p["y"])
            if not (0 <= y < image.shape[0] and 0 <= x < image.shape[1]):
                raise ProtocolError("bad_request", f"point ({x},{y}) outside image")
            hits = [m for _, m in regions if m[y, x]]
            if hits:
                instances.append((min(hits, key=lambda m: m.sum()), 1.0))
        for b in boxes:
            query = (int(b["x0"]), int(b["y0"]), int(b["x1"]), int(b["y1"]))
            scored = [(_bbox_iou(query, _bbox(m)), m) for _, m in regions]
            scored = [(s, m) for s, m in scored if s > 0]
            if scored:
                iou, mask = max(scored, key=lambda e: e[0])
                instances.append((mask, round(iou, 6)))
        return instances

    def segment_auto(self, image, grid_n):
        return [(mask, 1.0) for _, mask in self._regions(image)]

    def embed_image(self, image):
        # 4 bins per channel -> 64-d color histogram, L2 normalized
        bins = (image // 64).astype(np.int32)
        idx = bins[..., 0] * 16 + bins[..., 1] * 4 + bins[..., 2]
        hist = np.bincount(idx.ravel(), minlength=64).astype(np.float64)
        norm = np.linalg.norm(hist)
        return (hist / norm if norm else hist).tolist()

    def embed_texts(self, phrases):
        out = []
        for phrase in phrases:
            seed = int.from_bytes(hashlib.sha256(phrase.encode()).digest()[:8], "big")
            vec = np.random.default_rng(seed).standard_normal(self.embed_dim)
            out.append((vec / np.linalg.norm(vec)).tolist())
        return out


ADAPTERS = {"color-region": ColorRegionAdapter}


def load_adapter(config: Optional[dict] = None) -> Adapter:
    config = config or {}
    name = config.get("adapter", "color-region")
    if name not in ADAPTERS:
        raise ValueError(
            f"unknown adapter {name!r}; available: {', '.join(sorted(ADAPTERS))}"
        )
    kwargs = {k: v for k, v in config.items() if k != "adapter"}
    return ADAPTERS[name](**kwargs)
