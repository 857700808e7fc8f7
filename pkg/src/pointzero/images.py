"""PNG byte encoding/decoding for 8-bit grayscale and RGB arrays."""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image

__all__ = ["encode_png", "decode_png", "png_b64", "from_png_b64"]


def encode_png(arr: np.ndarray) -> bytes:
    """Encode an (H, W) or (H, W, 3) uint8 array as PNG bytes."""
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {a.dtype}")
    if a.ndim == 2:
        mode = "L"
    elif a.ndim == 3 and a.shape[2] == 3:
        mode = "RGB"
    else:
        raise ValueError(f"expected (H, W) or (H, W, 3) array, got shape {a.shape}")
    buf = io.BytesIO()
    Image.fromarray(a, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a uint8 array, (H, W) for L or (H, W, 3) for RGB."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ValueError(f"undecodable image: {exc}") from exc
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB" if img.mode in ("RGBA", "P", "CMYK") else "L")
    arr = np.asarray(img, dtype=np.uint8)
    if arr.size == 0:
        raise ValueError("undecodable image: zero pixels")
    return arr


def png_b64(arr: np.ndarray) -> str:
    return base64.b64encode(encode_png(arr)).decode("ascii")


def from_png_b64(text: str) -> np.ndarray:
    try:
        data = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise ValueError(f"invalid base64 image payload: {exc}") from exc
    return decode_png(data)
