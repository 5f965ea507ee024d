"""The model-inference contract and the remote HTTP client.

The engine never loads model weights; every inference call crosses this
contract.  Implementations must be safe for concurrent requests.
"""
from __future__ import annotations

import enum
import os
import threading
from abc import ABC, abstractmethod
from typing import Dict, List, Sequence

import numpy as np
import requests

from .core import BBox, ImageRaster, InstanceMask, PointPrompt, SimilarityMap, mask_iou
from . import wire


class Capability(str, enum.Enum):
    DETECT = "detect"
    SIMILARITY = "similarity"
    SEGMENT_PROMPTS = "segment_prompts"
    SEGMENT_AUTO = "segment_auto"
    EMBED_IMAGE = "embed_image"
    EMBED_TEXT = "embed_text"


ALL_CAPABILITIES = frozenset(Capability)


class BackendError(RuntimeError):
    """Inference-side failure, annotated with the failing endpoint/stage."""


class Backend(ABC):
    """Contract every model backend implements.

    A strategy may only run when the backend advertises the capabilities
    it needs; the strategies module enforces that.
    """

    capabilities: frozenset = ALL_CAPABILITIES

    @abstractmethod
    def detect_boxes(
        self,
        image: ImageRaster,
        phrases: Sequence[str],
        box_threshold: float,
        text_threshold: float,
    ) -> List[BBox]:
        ...

    @abstractmethod
    def similarity_map(self, image: ImageRaster, phrase: str) -> SimilarityMap:
        ...

    @abstractmethod
    def segment_prompts(
        self,
        image: ImageRaster,
        points: Sequence[PointPrompt],
        boxes: Sequence[BBox],
    ) -> List[InstanceMask]:
        ...

    @abstractmethod
    def segment_auto(self, image: ImageRaster, grid_n: int) -> List[InstanceMask]:
        ...

    @abstractmethod
    def embed_image(self, crop: ImageRaster) -> np.ndarray:
        ...

    @abstractmethod
    def embed_texts(self, phrases: Sequence[str]) -> List[np.ndarray]:
        ...


def dedup_instances(instances: Sequence[InstanceMask], iou_threshold: float = 0.9) -> List[InstanceMask]:
    """Drop near-duplicate masks, keeping the higher-confidence copy."""
    kept: List[InstanceMask] = []
    for inst in instances:
        replaced = False
        duplicate = False
        for i, prev in enumerate(kept):
            if mask_iou(inst.mask, prev.mask) > iou_threshold:
                duplicate = True
                if inst.confidence > prev.confidence:
                    kept[i] = inst
                    replaced = True
                break
        if not duplicate and not replaced:
            kept.append(inst)
    return kept


DEFAULT_REMOTE_ENV = "TEXT2SEG_BACKEND_URL"


class RemoteBackend(Backend):
    """Client for the HTTP/JSON wire protocol.

    Bounds concurrent in-flight requests and retries an idempotent
    request once on transport failure.
    """

    def __init__(self, base_url: str, max_inflight: int = 4, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._gate = threading.Semaphore(max_inflight)
        self._session = requests.Session()

    @classmethod
    def from_env(cls) -> "RemoteBackend":
        url = os.environ.get(DEFAULT_REMOTE_ENV)
        if not url:
            raise BackendError(f"no remote URL configured; set {DEFAULT_REMOTE_ENV}")
        return cls(url)

    def _post(self, path: str, payload: Dict) -> Dict:
        url = self.base_url + path
        with self._gate:
            try:
                resp = self._session.post(url, json=payload, timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout):
                try:
                    resp = self._session.post(url, json=payload, timeout=self.timeout)
                except requests.RequestException as exc:
                    raise BackendError(f"{path}: transport failure: {exc}") from exc
            except requests.RequestException as exc:
                raise BackendError(f"{path}: transport failure: {exc}") from exc
        if resp.status_code != 200:
            try:
                err = resp.json().get("error", {})
                detail = f"{err.get('code', 'unknown')}: {err.get('message', '')}"
            except ValueError:
                detail = f"HTTP {resp.status_code}"
            raise BackendError(f"{path}: {detail}")
        return resp.json()

    def detect_boxes(self, image, phrases, box_threshold, text_threshold):
        body = {
            "image_png_b64": wire.image_to_png_b64(image),
            "phrases": list(phrases),
            "box_threshold": box_threshold,
            "text_threshold": text_threshold,
        }
        resp = self._post("/v1/detect", body)
        return [wire.box_from_json(b) for b in resp.get("boxes", [])]

    def similarity_map(self, image, phrase):
        body = {"image_png_b64": wire.image_to_png_b64(image), "phrase": phrase}
        return wire.similarity_map_from_json(self._post("/v1/similarity", body))

    def segment_prompts(self, image, points, boxes):
        if not points and not boxes:
            raise BackendError("/v1/segment: at least one prompt is required")
        body = {
            "image_png_b64": wire.image_to_png_b64(image),
            "points": [wire.point_to_json(p) for p in points],
            "boxes": [wire.box_to_json(b) for b in boxes],
        }
        return wire.instances_from_json(self._post("/v1/segment", body))

    def segment_auto(self, image, grid_n):
        body = {"image_png_b64": wire.image_to_png_b64(image), "grid_n": grid_n}
        raw = wire.instances_from_json(self._post("/v1/segment_auto", body))
        return dedup_instances(raw)

    def embed_image(self, crop):
        body = {"image_png_b64": wire.image_to_png_b64(crop)}
        resp = self._post("/v1/embed_image", body)
        return np.asarray(resp["vector"], dtype=np.float64)

    def embed_texts(self, phrases):
        resp = self._post("/v1/embed_text", {"phrases": list(phrases)})
        return [np.asarray(v, dtype=np.float64) for v in resp["vectors"]]
