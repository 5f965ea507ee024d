"""Wire-protocol conformance suite.

Runs a fixed battery of requests against any transport (in-process
dispatch or a live server) and validates every response against the
protocol JSON schemas plus the semantic rules: RLE counts sum to w*h,
embeddings repeat deterministically, errors carry the error envelope.
"""
from __future__ import annotations

from typing import Callable, Dict, List, Tuple

import jsonschema

from . import wire
from .mock import MockScene, Shape

# post(path, payload) -> (status_code, body_json)
PostFn = Callable[[str, dict], Tuple[int, dict]]

_RLE_SCHEMA = {
    "type": "object",
    "required": ["w", "h", "counts"],
    "properties": {
        "w": {"type": "integer", "minimum": 1},
        "h": {"type": "integer", "minimum": 1},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
}

_INSTANCES_SCHEMA = {
    "type": "object",
    "required": ["instances"],
    "properties": {
        "instances": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rle", "confidence"],
                "properties": {
                    "rle": _RLE_SCHEMA,
                    "confidence": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        }
    },
}

RESPONSE_SCHEMAS = {
    "/v1/detect": {
        "type": "object",
        "required": ["boxes"],
        "properties": {
            "boxes": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["x0", "y0", "x1", "y1", "score", "phrase"],
                    "properties": {
                        "x0": {"type": "integer"},
                        "y0": {"type": "integer"},
                        "x1": {"type": "integer"},
                        "y1": {"type": "integer"},
                        "score": {"type": "number", "minimum": 0, "maximum": 1},
                        "phrase": {"type": "string"},
                    },
                },
            }
        },
    },
    "/v1/similarity": {
        "type": "object",
        "required": ["w", "h", "values_f32_b64"],
        "properties": {
            "w": {"type": "integer", "minimum": 1},
            "h": {"type": "integer", "minimum": 1},
            "values_f32_b64": {"type": "string"},
        },
    },
    "/v1/segment": _INSTANCES_SCHEMA,
    "/v1/segment_auto": _INSTANCES_SCHEMA,
    "/v1/embed_image": {
        "type": "object",
        "required": ["vector"],
        "properties": {"vector": {"type": "array", "items": {"type": "number"}}},
    },
    "/v1/embed_text": {
        "type": "object",
        "required": ["vectors"],
        "properties": {
            "vectors": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}},
            }
        },
    },
}

ERROR_SCHEMA = {
    "type": "object",
    "required": ["error"],
    "properties": {
        "error": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {
                "code": {"enum": ["bad_request", "model_error", "unsupported"]},
                "message": {"type": "string"},
            },
        }
    },
}


def reference_scene() -> MockScene:
    """Fixed two-object scene every conformance run is built from."""
    return MockScene(
        48,
        32,
        (
            Shape("rect", (4, 4, 20, 16), "building", {"building": 0.9, "house": 0.6}),
            Shape("circle", (34, 20, 6), "car", {"car": 1.0}),
        ),
    )


def golden_requests() -> List[Tuple[str, dict]]:
    scene = reference_scene()
    png = wire.image_to_png_b64(scene.render())
    return [
        ("/v1/detect", {"image_png_b64": png, "phrases": ["building", "car"], "box_threshold": 0.3, "text_threshold": 0.25}),
        ("/v1/similarity", {"image_png_b64": png, "phrase": "car"}),
        ("/v1/segment", {"image_png_b64": png, "points": [{"x": 34, "y": 20, "polarity": 1}], "boxes": []}),
        ("/v1/segment", {"image_png_b64": png, "points": [], "boxes": [{"x0": 4, "y0": 4, "x1": 20, "y1": 16, "score": 1.0, "phrase": "building"}]}),
        ("/v1/segment_auto", {"image_png_b64": png, "grid_n": 8}),
        ("/v1/embed_image", {"image_png_b64": png}),
        ("/v1/embed_text", {"phrases": ["building", "car", "background"]}),
    ]


def _check_instances(body: dict, w: int, h: int) -> List[str]:
    problems = []
    for i, inst in enumerate(body.get("instances", [])):
        rle = inst["rle"]
        if rle["w"] != w or rle["h"] != h:
            problems.append(f"instance {i}: RLE dims {rle['w']}x{rle['h']} != image {w}x{h}")
        if sum(rle["counts"]) != rle["w"] * rle["h"]:
            problems.append(f"instance {i}: RLE counts sum {sum(rle['counts'])} != w*h")
        if any(c == 0 for c in rle["counts"][1:]):
            problems.append(f"instance {i}: interior zero run")
    return problems


def run_conformance(post: PostFn) -> List[str]:
    """Run the suite; returns a list of problems (empty = pass)."""
    problems: List[str] = []
    scene = reference_scene()
    w, h = scene.width, scene.height

    for path, payload in golden_requests():
        status, body = post(path, payload)
        if status != 200:
            problems.append(f"{path}: HTTP {status}: {body}")
            continue
        try:
            jsonschema.validate(body, RESPONSE_SCHEMAS[path])
        except jsonschema.ValidationError as exc:
            problems.append(f"{path}: schema violation: {exc.message}")
            continue
        if path in ("/v1/segment", "/v1/segment_auto"):
            problems += _check_instances(body, w, h)
        if path == "/v1/similarity" and (body["w"] != w or body["h"] != h):
            problems.append(f"/v1/similarity: dims {body['w']}x{body['h']} != image")

    # determinism of repeated text embedding
    req = {"phrases": ["building", "car"]}
    status1, first = post("/v1/embed_text", req)
    status2, second = post("/v1/embed_text", req)
    if status1 != 200 or status2 != 200 or first != second:
        problems.append("/v1/embed_text: repeated request not identical")

    # malformed requests must produce the error envelope
    for path, payload in [
        ("/v1/segment", {"image_png_b64": wire.image_to_png_b64(scene.render()), "points": [], "boxes": []}),
        ("/v1/detect", {"image_png_b64": "not base64 png!!", "phrases": ["x"]}),
    ]:
        status, body = post(path, payload)
        if status == 200:
            problems.append(f"{path}: malformed request accepted")
            continue
        try:
            jsonschema.validate(body, ERROR_SCHEMA)
        except jsonschema.ValidationError as exc:
            problems.append(f"{path}: error envelope invalid: {exc.message}")
    return problems
