"""HTTP service consumed by the interactive workbench.

Segmentation requests go through the exact same tiling + strategy +
stitching path as batch evaluation, so the interactive result for an
(item, class, strategy, params) tuple equals the batch result.
"""
from __future__ import annotations

import base64
import io
from typing import Any, Dict, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from PIL import Image

from .backends import Backend, BackendError
from .core import BBox, PointPrompt, rle_encode
from .dataset import DatasetManifest, decode_gt, load_gt_raster, load_image, load_manifest, stitch, tile_image
from .harness import make_backend
from .metrics import confusion_counts, iou as iou_of, oa as oa_of
from .promptgen import ClassSpec, PointSamplingConfig
from .strategies import (
    STRATEGY_DESCRIPTIONS,
    REQUIRED_CAPABILITIES,
    FilterConfig,
    StrategyId,
    StrategyParams,
    run_strategy,
)
from . import wire


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def parse_params(obj: Optional[Dict[str, Any]]) -> StrategyParams:
    obj = obj or {}
    try:
        return StrategyParams(
            box_threshold=float(obj.get("box_threshold", 0.35)),
            text_threshold=float(obj.get("text_threshold", 0.25)),
            point_sampling=PointSamplingConfig(
                threshold=float(obj.get("point_threshold", 0.8)),
                max_points=int(obj.get("max_points", 5)),
            ),
            grid_n=int(obj.get("grid_n", 16)),
            filter=FilterConfig(tuple(obj.get("background_phrases", ("background", "other object")))),
            s5_fresh_gallery=bool(obj.get("s5_fresh_gallery", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ServiceError("bad_request", f"invalid params: {exc}") from exc


def _shift_trace(trace_json: dict, dx: int, dy: int) -> dict:
    for b in trace_json["prompt"]["boxes"]:
        b["x0"] += dx
        b["x1"] += dx
        b["y0"] += dy
        b["y1"] += dy
    for p in trace_json["prompt"]["points"]:
        p["x"] += dx
        p["y"] += dy
    return trace_json


def create_app(manifest_path, backend_spec: str, backend: Optional[Backend] = None) -> FastAPI:
    manifest: DatasetManifest = load_manifest(manifest_path)
    be = backend or make_backend(backend_spec)
    app = FastAPI(title="text2seg workbench service")

    @app.exception_handler(ServiceError)
    async def service_error(_req: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.get("/api/manifest")
    def get_manifest():
        return {
            "name": manifest.name,
            "tile_size": manifest.tile_size,
            "ignore_index": manifest.ignore_index,
            "classes": [
                {"id": c.id, "label": c.label, "synonyms": list(c.synonyms)}
                for c in manifest.classes
            ],
            "items": [
                {"id": i, "image": item.image.name, "has_gt": item.gt is not None}
                for i, item in enumerate(manifest.items)
            ],
        }

    @app.get("/api/strategies")
    def get_strategies():
        return {
            "strategies": [
                {
                    "id": s.value,
                    "description": STRATEGY_DESCRIPTIONS[s],
                    "requires": sorted(c.value for c in REQUIRED_CAPABILITIES[s]),
                }
                for s in StrategyId
            ]
        }

    @app.get("/api/items/{item_id}/image")
    def get_item_image(item_id: int):
        if not (0 <= item_id < len(manifest.items)):
            raise ServiceError("bad_request", f"no item {item_id}", 404)
        img = load_image(manifest.items[item_id].image)
        buf = io.BytesIO()
        Image.fromarray(np.asarray(img.pixels)).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/api/segment")
    async def segment(request: Request):
        try:
            body = await request.json()
        except Exception as exc:
            raise ServiceError("bad_request", f"invalid JSON body: {exc}") from exc

        label = body.get("class_label")
        if not label:
            raise ServiceError("bad_request", "class_label is required")
        synonyms = tuple(body.get("synonyms", ()))
        try:
            spec = ClassSpec(0, label, synonyms)
        except ValueError as exc:
            raise ServiceError("bad_request", str(exc)) from exc
        try:
            strategy = StrategyId(body.get("strategy", ""))
        except ValueError:
            raise ServiceError("bad_request", f"unknown strategy {body.get('strategy')!r}")
        params = parse_params(body.get("params"))

        gt_masks = ignore = None
        class_id = None
        if "item" in body and body["item"] is not None:
            item_id = int(body["item"])
            if not (0 <= item_id < len(manifest.items)):
                raise ServiceError("bad_request", f"no item {item_id}", 404)
            item = manifest.items[item_id]
            image = load_image(item.image)
            if item.gt is not None:
                gt_masks, ignore = decode_gt(load_gt_raster(item.gt), manifest)
                for c in manifest.classes:
                    if c.label == label:
                        class_id = c.id
                        break
        elif "image_png_b64" in body:
            try:
                image = wire.png_b64_to_image(body["image_png_b64"])
            except wire.WireError as exc:
                raise ServiceError(exc.code, exc.message) from exc
        else:
            raise ServiceError("bad_request", "provide either item or image_png_b64")

        grid, tiles = tile_image(image, manifest.tile_size)
        try:
            traces = [run_strategy(be, tile, spec, strategy, params) for tile in tiles]
        except BackendError as exc:
            raise ServiceError("model_error", str(exc), 502) from exc
        final = stitch(grid, [t.final for t in traces])

        if len(traces) == 1:
            trace_json = traces[0].to_json()
        else:
            # merge tile traces: offset geometry, drop per-tile heatmaps
            trace_json = traces[0].to_json()
            trace_json["prompt"] = {"boxes": [], "points": []}
            trace_json["similarity_maps"] = []
            trace_json["gallery"] = []
            for i, t in enumerate(traces):
                row, col = divmod(i, grid.columns)
                piece = _shift_trace(t.to_json(), col * grid.tile_size, row * grid.tile_size)
                trace_json["prompt"]["boxes"] += piece["prompt"]["boxes"]
                trace_json["prompt"]["points"] += piece["prompt"]["points"]
                trace_json["gallery"] += piece["gallery"]
        trace_json["final_rle"] = wire.rle_to_json(rle_encode(final))

        response = {"final_rle": wire.rle_to_json(rle_encode(final)), "trace": trace_json}
        if gt_masks is not None and class_id is not None:
            counts = confusion_counts(final, gt_masks[class_id], ignore)
            response["metrics"] = {"iou": iou_of(counts), "oa": oa_of(counts)}
        return response

    return app
