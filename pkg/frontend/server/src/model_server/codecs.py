"""Wire codecs: base64 PNG images, base64 f32 maps, row-major RLE."""
import base64
import binascii
import io
from typing import List

import numpy as np
from PIL import Image


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def png_b64_to_array(data: str) -> np.ndarray:
    """Decode a base64 PNG into an (h, w, 3) uint8 array."""
    try:
        raw = base64.b64decode(data, validate=True)
        img = Image.open(io.BytesIO(raw)).convert("RGB")
    except (binascii.Error, ValueError, OSError) as exc:
        raise ProtocolError("bad_request", f"invalid PNG payload: {exc}")
    return np.asarray(img, dtype=np.uint8)


def array_to_png_b64(pixels: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def floats_to_b64(values: np.ndarray) -> str:
    return base64.b64encode(
        np.asarray(values, dtype="<f4").tobytes()
    ).decode("ascii")


def rle_counts(mask: np.ndarray) -> List[int]:
    """Alternating run lengths over the flattened mask, zeros first.

    counts[0] is the leading zero run and may be 0; later counts never are.
    """
    flat = np.asarray(mask, dtype=bool).ravel()
    edges = np.flatnonzero(np.diff(flat))
    starts = np.concatenate(([0], edges + 1))
    runs = np.diff(np.concatenate((starts, [flat.size]))).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(c) for c in runs]


def rle_json(mask: np.ndarray) -> dict:
    h, w = mask.shape
    return {"w": int(w), "h": int(h), "counts": rle_counts(mask)}
