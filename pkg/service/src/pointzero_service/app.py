"""HTTP service implementing the encode/style-transfer wire protocol.

Routes:
  GET  /health            -> {"status", "dim", "model", ...}
  POST /v1/encode_text    {"prompts": [...]}            -> {"dim", "embeddings"}
  POST /v1/encode_image   {"image_png_b64": ...}        -> {"dim", "embedding"}
  POST /v1/style_transfer {"depth_png_b64", "prompt",
                           "seed", "steps", "guidance"} -> {"image_png_b64"}

Every error body is {"error": message}: 400 malformed requests, 413
oversized images, 500 model failures. Handlers run concurrently but all
model execution is funneled through one serial queue per process; every
request is independent and correlation ids are echoed into the log only.
"""

from __future__ import annotations

import base64
import io
import logging
import threading
import time
from typing import Callable, TypeVar

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .config import ServiceConfig
from .models import resolve_diffusion, resolve_encoder

__all__ = ["ApiError", "SerialExecutor", "create_app"]

log = logging.getLogger("pointzero_service")

T = TypeVar("T")

# Hard ceiling on decoded pixel count, independent of the byte budget.
MAX_PIXELS = 1 << 24


class ApiError(Exception):
    """Error with an HTTP status; rendered as {"error": message}."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class SerialExecutor:
    """Funnels model calls through one lock; counters expose the behavior.

    active_peak is the most calls ever inside a model simultaneously
    (stays 1 by construction), pending_peak the most ever queued at once.
    """

    def __init__(self) -> None:
        self._gate = threading.Lock()
        self._meta = threading.Lock()
        self._pending = 0
        self._active = 0
        self.pending_peak = 0
        self.active_peak = 0
        self.completed = 0

    def run(self, fn: Callable[[], T]) -> T:
        with self._meta:
            self._pending += 1
            self.pending_peak = max(self.pending_peak, self._pending)
        try:
            with self._gate:
                with self._meta:
                    self._active += 1
                    self.active_peak = max(self.active_peak, self._active)
                try:
                    return fn()
                finally:
                    with self._meta:
                        self._active -= 1
                        self.completed += 1
        finally:
            with self._meta:
                self._pending -= 1


class EncodeTextRequest(BaseModel):
    prompts: list[str]


class EncodeImageRequest(BaseModel):
    image_png_b64: str


class StyleTransferRequest(BaseModel):
    depth_png_b64: str
    prompt: str
    seed: int = 0
    steps: int | None = None
    guidance: float | None = None


def _decode_image(b64: str, limit: int) -> np.ndarray:
    """Base64 PNG to a uint8 array; 413 beyond budget, 400 when undecodable."""
    if len(b64) > 4 * ((limit + 2) // 3):
        raise ApiError(413, f"image payload exceeds {limit} bytes")
    try:
        data = base64.b64decode(b64.encode("ascii"), validate=True)
    except Exception as exc:
        raise ApiError(400, f"invalid base64 image payload: {exc}") from exc
    if len(data) > limit:
        raise ApiError(413, f"image payload exceeds {limit} bytes")
    try:
        img = Image.open(io.BytesIO(data))
        if img.size[0] * img.size[1] > MAX_PIXELS:
            raise ApiError(413, f"image exceeds {MAX_PIXELS} pixels")
        img.load()
    except ApiError:
        raise
    except Exception as exc:
        raise ApiError(400, f"undecodable image: {exc}") from exc
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.uint8)
    if arr.size == 0:
        raise ApiError(400, "undecodable image: zero pixels")
    return arr


def _encode_png_b64(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _guarded(executor: SerialExecutor, what: str, fn: Callable[[], T]) -> T:
    try:
        return executor.run(fn)
    except ApiError:
        raise
    except Exception as exc:
        raise ApiError(500, f"{what} failure: {exc}") from exc


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    """Resolve models per config and return the ready-to-serve app."""
    config = config or ServiceConfig()
    encoder, encoder_notes = resolve_encoder(config)
    diffusion, diffusion_notes = resolve_diffusion(config)
    for note in (*encoder_notes, *diffusion_notes):
        log.warning("%s", note)

    app = FastAPI(title="pointzero-service", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.encoder = encoder
    app.state.diffusion = diffusion
    app.state.executor = SerialExecutor()

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse({"error": exc.message}, status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(part) for part in first.get("loc", ()) if part != "body")
        what = first.get("msg", "invalid")
        detail = f"{where}: {what}" if where else what
        return JSONResponse({"error": f"malformed request body: {detail}"}, status_code=400)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse({"error": str(exc.detail)}, status_code=exc.status_code)

    @app.exception_handler(Exception)
    async def on_unhandled(request: Request, exc: Exception):
        return JSONResponse({"error": f"internal error: {exc}"}, status_code=500)

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        log.info(
            "request method=%s path=%s status=%d ms=%.1f correlation=%s",
            request.method,
            request.url.path,
            response.status_code,
            (time.perf_counter() - t0) * 1000.0,
            request.headers.get("x-correlation-id", "-"),
        )
        return response

    @app.get("/health")
    def health(request: Request):
        state = request.app.state
        return {
            "status": "ok",
            "dim": state.encoder.dim,
            "model": state.encoder.model_id,
            "diffusion": state.diffusion.model_id,
        }

    @app.post("/v1/encode_text")
    def encode_text(body: EncodeTextRequest, request: Request):
        state = request.app.state
        if not body.prompts:
            raise ApiError(400, "prompts must be nonempty")
        for i, prompt in enumerate(body.prompts):
            if not prompt:
                raise ApiError(400, f"empty prompt at index {i}")
        vecs = _guarded(state.executor, "encoder", lambda: state.encoder.encode_text(body.prompts))
        return {"dim": state.encoder.dim, "embeddings": np.asarray(vecs).tolist()}

    @app.post("/v1/encode_image")
    def encode_image(body: EncodeImageRequest, request: Request):
        state = request.app.state
        arr = _decode_image(body.image_png_b64, state.config.max_image_bytes)
        vec = _guarded(state.executor, "encoder", lambda: state.encoder.encode_image(arr))
        return {"dim": state.encoder.dim, "embedding": np.asarray(vec).tolist()}

    @app.post("/v1/style_transfer")
    def style_transfer(body: StyleTransferRequest, request: Request):
        state = request.app.state
        if not body.prompt:
            raise ApiError(400, "prompt must be nonempty")
        steps = state.config.steps if body.steps is None else body.steps
        if steps < 1:
            raise ApiError(400, f"steps must be >= 1, got {steps}")
        guidance = state.config.guidance if body.guidance is None else body.guidance
        if not guidance > 0:
            raise ApiError(400, f"guidance must be positive, got {guidance}")
        depth = _decode_image(body.depth_png_b64, state.config.max_image_bytes)
        out = _guarded(
            state.executor,
            "generator",
            lambda: state.diffusion.style_transfer(depth, body.prompt, body.seed, steps, guidance),
        )
        out = np.asarray(out)
        if out.dtype != np.uint8 or out.ndim != 3 or out.shape[:2] != depth.shape[:2]:
            raise ApiError(500, f"generator produced {out.dtype} {out.shape}, want uint8 RGB of {depth.shape[:2]}")
        return {"image_png_b64": _encode_png_b64(out)}

    return app
