"""Encoding helpers for the HTTP/JSON wire protocol.

Images travel as base64 PNG, float maps as base64 little-endian f32,
masks as RLE JSON.  ``dispatch`` maps a decoded request onto a backend,
which lets any in-process backend answer wire-level requests (used by
the conformance suite and the mock-backed tests).
"""
from __future__ import annotations

import base64
import io
from typing import Any, Dict, List, Sequence

import numpy as np
from PIL import Image

from .core import BBox, BinaryMask, ImageRaster, InstanceMask, PointPrompt, RleMask, SimilarityMap
from .core import rle_decode, rle_encode


class WireError(Exception):
    """Protocol-level failure; carries the wire error code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


def image_to_png_b64(img: ImageRaster) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(img.pixels), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def png_b64_to_image(data: str) -> ImageRaster:
    try:
        raw = base64.b64decode(data)
        pil = Image.open(io.BytesIO(raw)).convert("RGB")
    except Exception as exc:
        raise WireError("bad_request", f"undecodable PNG payload: {exc}") from exc
    return ImageRaster(np.asarray(pil))


def floats_to_b64(values: np.ndarray) -> str:
    arr = np.ascontiguousarray(values, dtype="<f4")
    return base64.b64encode(arr.tobytes()).decode("ascii")


def b64_to_floats(data: str, count: int) -> np.ndarray:
    raw = base64.b64decode(data)
    arr = np.frombuffer(raw, dtype="<f4")
    if arr.size != count:
        raise WireError("bad_request", f"expected {count} floats, got {arr.size}")
    return arr.astype(np.float64)


def rle_to_json(r: RleMask) -> Dict[str, Any]:
    return {"w": r.width, "h": r.height, "counts": list(r.counts)}


def rle_from_json(obj: Dict[str, Any]) -> RleMask:
    try:
        return RleMask(int(obj["w"]), int(obj["h"]), tuple(obj["counts"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise WireError("bad_request", f"invalid RLE mask: {exc}") from exc


def box_to_json(b: BBox) -> Dict[str, Any]:
    return {
        "x0": b.x0,
        "y0": b.y0,
        "x1": b.x1,
        "y1": b.y1,
        "score": b.score,
        "phrase": b.phrase,
    }


def box_from_json(obj: Dict[str, Any]) -> BBox:
    try:
        return BBox(
            int(obj["x0"]),
            int(obj["y0"]),
            int(obj["x1"]),
            int(obj["y1"]),
            float(obj.get("score", 1.0)),
            str(obj.get("phrase", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise WireError("bad_request", f"invalid box: {exc}") from exc


def point_to_json(p: PointPrompt) -> Dict[str, Any]:
    return {"x": p.x, "y": p.y, "polarity": 1 if p.polarity else 0}


def point_from_json(obj: Dict[str, Any]) -> PointPrompt:
    try:
        return PointPrompt(int(obj["x"]), int(obj["y"]), bool(obj.get("polarity", 1)))
    except (KeyError, TypeError, ValueError) as exc:
        raise WireError("bad_request", f"invalid point: {exc}") from exc


def instances_to_json(instances: Sequence[InstanceMask]) -> Dict[str, Any]:
    return {
        "instances": [
            {"rle": rle_to_json(rle_encode(i.mask)), "confidence": i.confidence}
            for i in instances
        ]
    }


def instances_from_json(obj: Dict[str, Any]) -> List[InstanceMask]:
    out = []
    for item in obj.get("instances", []):
        out.append(
            InstanceMask(rle_decode(rle_from_json(item["rle"])), float(item["confidence"]))
        )
    return out


def dispatch(backend, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
    """Answer one wire request with an in-process backend.

    Raises WireError with code bad_request / model_error / unsupported.
    """
    try:
        if path == "/v1/detect":
            image = png_b64_to_image(payload["image_png_b64"])
            phrases = list(payload["phrases"])
            if not phrases:
                raise WireError("bad_request", "phrases must be nonempty")
            boxes = backend.detect_boxes(
                image,
                phrases,
                float(payload.get("box_threshold", 0.0)),
                float(payload.get("text_threshold", 0.0)),
            )
            return {"boxes": [box_to_json(b) for b in boxes]}
        if path == "/v1/similarity":
            image = png_b64_to_image(payload["image_png_b64"])
            smap = backend.similarity_map(image, str(payload["phrase"]))
            return {
                "w": smap.width,
                "h": smap.height,
                "values_f32_b64": floats_to_b64(smap.values),
            }
        if path == "/v1/segment":
            image = png_b64_to_image(payload["image_png_b64"])
            points = [point_from_json(p) for p in payload.get("points", [])]
            boxes = [box_from_json(b) for b in payload.get("boxes", [])]
            if not points and not boxes:
                raise WireError("bad_request", "at least one prompt is required")
            return instances_to_json(backend.segment_prompts(image, points, boxes))
        if path == "/v1/segment_auto":
            image = png_b64_to_image(payload["image_png_b64"])
            return instances_to_json(backend.segment_auto(image, int(payload.get("grid_n", 16))))
        if path == "/v1/embed_image":
            image = png_b64_to_image(payload["image_png_b64"])
            vec = backend.embed_image(image)
            return {"vector": [float(v) for v in vec]}
        if path == "/v1/embed_text":
            phrases = list(payload["phrases"])
            if not phrases:
                raise WireError("bad_request", "phrases must be nonempty")
            vecs = backend.embed_texts(phrases)
            return {"vectors": [[float(v) for v in vec] for vec in vecs]}
    except WireError:
        raise
    except KeyError as exc:
        raise WireError("bad_request", f"missing field {exc}") from exc
    except Exception as exc:
        raise WireError("model_error", str(exc)) from exc
    raise WireError("unsupported", f"unknown endpoint {path}")


def similarity_map_from_json(obj: Dict[str, Any]) -> SimilarityMap:
    w = int(obj["w"])
    h = int(obj["h"])
    values = b64_to_floats(obj["values_f32_b64"], w * h).reshape(h, w)
    return SimilarityMap(values)
