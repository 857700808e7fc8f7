"""Encoding and style-transfer backends behind one small interface.

Three implementations: a remote HTTP client speaking the JSON wire
protocol, a hash-seeded mock that needs no models, and a planted mock
whose embeddings are decodable by construction so the full pipeline has a
ground-truth oracle. All backends return unit-norm embeddings of one
fixed dimension; the classifier works against any of them unchanged.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import requests
from scipy import ndimage

from .images import from_png_b64, png_b64
from .rng import substream

__all__ = [
    "Embedding",
    "BackendConfig",
    "BackendError",
    "Backend",
    "MockBackend",
    "PlantedBackend",
    "planted_mock",
    "RemoteBackend",
    "STAMP_SIZE",
]

STAMP_SIZE = 16  # reserved top-left block carrying the style prompt's class


class BackendError(RuntimeError):
    """Transport failure or a contract violation in a backend response."""


@dataclass(frozen=True, eq=False)
class Embedding:
    """Unit-norm feature vector; the norm contract is validated on entry."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"embedding must be a nonempty 1D vector, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("embedding has non-finite values")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-5:
            raise ValueError(f"embedding norm {norm} is not 1 within 1e-5")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = "mock"
    timeout: float = 60.0
    max_inflight: int = 4
    logit_scale: float = 100.0

    def __post_init__(self):
        if not self.timeout > 0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}")
        if self.max_inflight < 1:
            raise ValueError(f"max_inflight must be >= 1, got {self.max_inflight}")
        if not self.logit_scale > 0:
            raise ValueError(f"logit_scale must be > 0, got {self.logit_scale}")


class Backend(Protocol):
    def encode_text(self, prompts: list[str]) -> list[Embedding]: ...

    def encode_image(self, image: np.ndarray) -> Embedding: ...

    def style_transfer(self, depth_image: np.ndarray, prompt: str, seed: int) -> np.ndarray: ...

    def info(self) -> dict: ...


def _normalized(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _check_image(image: np.ndarray) -> np.ndarray:
    a = np.asarray(image)
    if a.size == 0:
        raise ValueError("undecodable image: zero pixels")
    if a.dtype != np.uint8 or a.ndim not in (2, 3):
        raise ValueError(f"undecodable image: expected uint8 (H,W[,3]), got {a.dtype} {a.shape}")
    return a


def _gray(image: np.ndarray) -> np.ndarray:
    return image if image.ndim == 2 else image[:, :, 0]


def _stamp(image_gray: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Replicate grayscale to RGB with `block` written into the reserved corner."""
    h, w = image_gray.shape
    s = min(STAMP_SIZE, h, w)
    out = np.repeat(image_gray[:, :, None], 3, axis=2).copy()
    out[:s, :s, :] = block[:s, :s, None]
    return out


@dataclass(eq=False)
class MockBackend:
    """Deterministic stand-in: embeddings are seeded hash expansions.

    encode_text/encode_image expand a hash of their input through the
    seeded random source and normalize; style_transfer replicates the
    depth map to RGB and stamps a prompt-derived block into the reserved
    corner. No semantic structure beyond determinism is promised.
    """

    dim: int = 512
    seed: int = 0

    def _expand(self, *key) -> Embedding:
        return Embedding(_normalized(substream(*key).standard_normal(self.dim)))

    def encode_text(self, prompts: list[str]) -> list[Embedding]:
        if not prompts:
            raise ValueError("prompts must be nonempty")
        return [self._expand("mock-text", self.seed, p) for p in prompts]

    def encode_image(self, image: np.ndarray) -> Embedding:
        a = _check_image(image)
        return self._expand("mock-image", self.seed, a.shape, a.dtype.str, a.tobytes())

    def style_transfer(self, depth_image: np.ndarray, prompt: str, seed: int) -> np.ndarray:
        if not prompt:
            raise ValueError("prompt must be nonempty")
        a = _gray(_check_image(depth_image))
        block = substream("mock-stamp", self.seed, prompt).integers(
            1, 256, size=(STAMP_SIZE, STAMP_SIZE), dtype=np.int64
        ).astype(np.uint8)
        return _stamp(a, block)

    def info(self) -> dict:
        return {"status": "ok", "dim": self.dim, "model": "mock"}


@dataclass(eq=False)
class PlantedBackend:
    """Oracle backend with decodable embeddings for end-to-end tests.

    Text embeddings are exactly orthonormal per-class vectors. Its
    style_transfer stamps the guidance class's block into the reserved
    corner (clearing that corner first); encode_image decodes the stamp
    back to the guidance class j and reads the content class c as
    (number of connected nonzero blobs outside the corner) - 1. The
    returned embedding is the normalization of

        0.992 v_j + 0.12 v_c + r u        (stamped)
        0.19 v_c + r u                    (unstamped, content readable)
        u                                 (no signal)

    with u a unit vector orthogonal to every class vector and r soaking
    up the remaining norm, so cosine with the stamped class is > 0.99
    and with every other class < 0.2.
    """

    classes: tuple[str, ...]
    dim: int = 512
    seed: int = 0
    _rows: np.ndarray = field(init=False, repr=False)
    _noise: np.ndarray = field(init=False, repr=False)
    _blocks: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.classes = tuple(self.classes)
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class names")
        k = len(self.classes)
        if self.dim < 8:
            raise ValueError(f"dim must be >= 8, got {self.dim}")
        if self.dim < k + 1:
            raise ValueError(f"dim {self.dim} too small for {k} orthonormal classes plus noise")
        g = substream("planted-basis", self.seed, k, self.dim).standard_normal((self.dim, k + 1))
        q, _ = np.linalg.qr(g)
        self._rows = q[:, :k].T.copy()
        self._noise = q[:, k].copy()
        blocks = []
        for name in self.classes:
            b = substream("planted-stamp", self.seed, name).integers(
                1, 256, size=(STAMP_SIZE, STAMP_SIZE), dtype=np.int64
            ).astype(np.uint8)
            blocks.append(b)
        self._blocks = tuple(blocks)

    def encode_text(self, prompts: list[str]) -> list[Embedding]:
        if not prompts:
            raise ValueError("prompts must be nonempty")
        out = []
        for p in prompts:
            j = self._class_in_text(p)
            if j is None:
                out.append(Embedding(self._noise))
            else:
                out.append(Embedding(self._rows[j]))
        return out

    def _class_in_text(self, text: str) -> int | None:
        """Longest class name occurring in the text, ties to lower index."""
        best, best_len = None, 0
        for i, name in enumerate(self.classes):
            if name in text and len(name) > best_len:
                best, best_len = i, len(name)
        return best

    def _decode_stamp(self, gray: np.ndarray) -> int | None:
        s = STAMP_SIZE
        if gray.shape[0] < s or gray.shape[1] < s:
            return None
        corner = gray[:s, :s]
        for j, block in enumerate(self._blocks):
            if np.array_equal(corner, block):
                return j
        return None

    def _decode_content(self, gray: np.ndarray) -> int | None:
        body = gray.copy()
        body[:STAMP_SIZE, :STAMP_SIZE] = 0
        _, n_blobs = ndimage.label(body > 0, structure=np.ones((3, 3), dtype=np.int8))
        if 1 <= n_blobs <= len(self.classes):
            return n_blobs - 1
        return None

    def encode_image(self, image: np.ndarray) -> Embedding:
        gray = _gray(_check_image(image))
        j = self._decode_stamp(gray)
        c = self._decode_content(gray)
        v = np.zeros(self.dim)
        budget = 1.0
        if j is not None:
            v = v + 0.992 * self._rows[j]
            budget -= 0.992**2
            if c is not None:
                v = v + 0.12 * self._rows[c]
                budget -= 0.12**2
        elif c is not None:
            v = v + 0.19 * self._rows[c]
            budget -= 0.19**2
        v = v + np.sqrt(max(budget, 0.0)) * self._noise
        return Embedding(_normalized(v))

    def style_transfer(self, depth_image: np.ndarray, prompt: str, seed: int) -> np.ndarray:
        if not prompt:
            raise ValueError("prompt must be nonempty")
        a = _gray(_check_image(depth_image)).copy()
        j = self._class_in_text(prompt)
        if j is None:
            raise BackendError(f"no known class name in style prompt {prompt!r}")
        a[:STAMP_SIZE, :STAMP_SIZE] = 0
        return _stamp(a, self._blocks[j])

    def info(self) -> dict:
        return {"status": "ok", "dim": self.dim, "model": "planted-mock"}

    def class_vector(self, k: int) -> np.ndarray:
        return self._rows[k].copy()


def planted_mock(classes, dim: int = 512, seed: int = 0) -> PlantedBackend:
    """Backend whose image embeddings decode stamped class tokens exactly."""
    return PlantedBackend(classes=tuple(classes), dim=dim, seed=seed)


@dataclass(eq=False)
class RemoteBackend:
    """HTTP client for the encode/style-transfer wire protocol.

    At most max_inflight requests are in flight at once (semaphore);
    every request carries a fresh correlation id header and responses are
    consumed strictly per-request, never matched by arrival order.
    """

    config: BackendConfig
    session: requests.Session | None = None
    steps: int = 20

    def __post_init__(self):
        if self.session is None:
            self.session = requests.Session()
        self._gate = threading.BoundedSemaphore(self.config.max_inflight)

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = self.config.endpoint.rstrip("/") + path
        headers = {"X-Correlation-Id": uuid.uuid4().hex}
        with self._gate:
            try:
                if method == "GET":
                    resp = self.session.get(url, timeout=self.config.timeout, headers=headers)
                else:
                    resp = self.session.post(
                        url, json=payload, timeout=self.config.timeout, headers=headers
                    )
            except requests.RequestException as exc:
                raise BackendError(f"transport failure for {path}: {exc}") from exc
        try:
            body = resp.json()
        except ValueError as exc:
            raise BackendError(f"non-JSON response from {path} (HTTP {resp.status_code})") from exc
        if resp.status_code >= 400:
            raise BackendError(f"{path} failed (HTTP {resp.status_code}): {body.get('error', body)}")
        return body

    def _embedding(self, values, context: str) -> Embedding:
        v = np.asarray(values, dtype=np.float64)
        try:
            return Embedding(v)
        except ValueError as exc:
            raise BackendError(f"bad embedding for {context}: {exc}") from exc

    def encode_text(self, prompts: list[str]) -> list[Embedding]:
        if not prompts:
            raise ValueError("prompts must be nonempty")
        body = self._request("POST", "/v1/encode_text", {"prompts": list(prompts)})
        raw = body.get("embeddings")
        if not isinstance(raw, list) or len(raw) != len(prompts):
            raise BackendError(f"expected {len(prompts)} embeddings, got {raw if raw is None else len(raw)}")
        dim = int(body.get("dim", 0))
        out = []
        for i, values in enumerate(raw):
            e = self._embedding(values, f"prompt {i}")
            if e.dim != dim:
                raise BackendError(f"dimension mismatch for prompt {i}: {e.dim} != {dim}")
            out.append(e)
        return out

    def encode_image(self, image: np.ndarray) -> Embedding:
        body = self._request("POST", "/v1/encode_image", {"image_png_b64": png_b64(image)})
        e = self._embedding(body.get("embedding"), "image")
        if e.dim != int(body.get("dim", e.dim)):
            raise BackendError(f"dimension mismatch for image: {e.dim} != {body.get('dim')}")
        return e

    def style_transfer(self, depth_image: np.ndarray, prompt: str, seed: int) -> np.ndarray:
        if not prompt:
            raise ValueError("prompt must be nonempty")
        depth = _check_image(depth_image)
        body = self._request(
            "POST",
            "/v1/style_transfer",
            {"depth_png_b64": png_b64(depth), "prompt": prompt, "seed": int(seed), "steps": self.steps},
        )
        try:
            img = from_png_b64(body.get("image_png_b64") or "")
        except ValueError as exc:
            raise BackendError(f"bad style_transfer image: {exc}") from exc
        if img.ndim != 3 or img.shape[:2] != depth.shape[:2]:
            raise BackendError(
                f"style_transfer size mismatch: got {img.shape}, want {depth.shape[:2]} RGB"
            )
        return img

    def info(self) -> dict:
        return self._request("GET", "/health")
