"""FastAPI application exposing the wire protocol over an Adapter."""
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .adapters import Adapter, load_adapter
from .codecs import ProtocolError, floats_to_b64, png_b64_to_array, rle_json

_STATUS = {"bad_request": 400, "model_error": 500, "unsupported": 501}


def _envelope(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def create_app(adapter: Adapter = None) -> FastAPI:
    adapter = adapter or load_adapter()
    app = FastAPI(title="text2seg model server")

    @app.exception_handler(ProtocolError)
    async def protocol_error(request: Request, exc: ProtocolError):
        return JSONResponse(
            _envelope(exc.code, exc.message), status_code=_STATUS[exc.code]
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(_envelope("bad_request", str(exc)), status_code=400)

    @app.exception_handler(Exception)
    async def unexpected(request: Request, exc: Exception):
        return JSONResponse(_envelope("model_error", str(exc)), status_code=500)

    def need(payload: dict, field: str):
        if field not in payload:
            raise ProtocolError("bad_request", f"missing field {field!r}")
        return payload[field]

    def image_of(payload: dict):
        return png_b64_to_array(need(payload, "image_png_b64"))

    def instances_json(instances):
        return {
            "instances": [
                {"rle": rle_json(mask), "confidence": float(conf)}
                for mask, conf in instances
            ]
        }

    @app.get("/v1/info")
    async def info():
        return {
            "capabilities": list(adapter.capabilities),
            "model_ids": dict(adapter.model_ids),
        }

    @app.post("/v1/detect")
    async def detect(payload: dict):
        phrases = list(need(payload, "phrases"))
        if not phrases:
            raise ProtocolError("bad_request", "phrases must be nonempty")
        boxes = adapter.detect(
            image_of(payload),
            phrases,
            float(payload.get("box_threshold", 0.0)),
            float(payload.get("text_threshold", 0.0)),
        )
        return {"boxes": boxes}

    @app.post("/v1/similarity")
    async def similarity(payload: dict):
        values = adapter.similarity(image_of(payload), str(need(payload, "phrase")))
        h, w = values.shape
        return {"w": w, "h": h, "values_f32_b64": floats_to_b64(values)}

    @app.post("/v1/segment")
    async def segment(payload: dict):
        points = payload.get("points", [])
        boxes = payload.get("boxes", [])
        if not points and not boxes:
            raise ProtocolError("bad_request", "at least one prompt is required")
        return instances_json(adapter.segment(image_of(payload), points, boxes))

    @app.post("/v1/segment_auto")
    async def segment_auto(payload: dict):
        return instances_json(
            adapter.segment_auto(image_of(payload), int(payload.get("grid_n", 16)))
        )

    @app.post("/v1/embed_image")
    async def embed_image(payload: dict):
        return {"vector": adapter.embed_image(image_of(payload))}

    @app.post("/v1/embed_text")
    async def embed_text(payload: dict):
        phrases = list(need(payload, "phrases"))
        if not phrases:
            raise ProtocolError("bad_request", "phrases must be nonempty")
        return {"vectors": adapter.embed_texts(phrases)}

    return app
