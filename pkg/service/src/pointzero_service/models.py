"""Model backends behind the HTTP routes.

Two families implement the same two protocols: thin wrappers around
pretrained checkpoints (contrastive encoder, depth-conditioned
generator), and deterministic development fallbacks that need no
weights, no network, and no accelerator. The fallbacks keep every
protocol-level promise (unit norms, determinism, seed-faithful
generation) so the full service stack is exercisable anywhere; they
carry no semantic signal, which is why accuracy checks are reserved for
real weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from PIL import Image

from .config import DEV_ID, ServiceConfig

__all__ = [
    "Encoder",
    "Generator",
    "prepare_image",
    "DevEncoder",
    "DevDiffusion",
    "OpenClipEncoder",
    "TransformersClipEncoder",
    "ControlNetDiffusion",
    "resolve_encoder",
    "resolve_diffusion",
]


class Encoder(Protocol):
    dim: int
    native_size: int
    model_id: str

    def encode_text(self, prompts: Sequence[str]) -> np.ndarray: ...

    def encode_image(self, image: np.ndarray) -> np.ndarray: ...


class Generator(Protocol):
    model_id: str

    def style_transfer(
        self, depth: np.ndarray, prompt: str, seed: int, steps: int, guidance: float
    ) -> np.ndarray: ...


def prepare_image(arr: np.ndarray, size: int) -> np.ndarray:
    """Grayscale replicated to 3 channels, bicubic-resized to (size, size) RGB."""
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {a.dtype}")
    if a.ndim == 2:
        a = np.stack([a, a, a], axis=-1)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected (H, W) or (H, W, 3) array, got shape {a.shape}")
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    img = Image.fromarray(a, mode="RGB")
    if img.size != (size, size):
        img = img.resize((size, size), Image.BICUBIC)
    return np.asarray(img, dtype=np.uint8)


def _digest64(*parts: object) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(part if isinstance(part, bytes) else str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


@dataclass
class DevEncoder:
    """Hash-seeded stand-in encoder: deterministic unit vectors, no weights.

    Text and prepared image bytes are hashed into independent PCG64
    streams, so equal inputs map to identical embeddings and any change
    to the input changes the vector.
    """

    dim: int = 1024
    seed: int = 0
    native_size: int = 224
    model_id: str = field(init=False)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        self.model_id = f"dev/hash-encoder-{self.dim}d"

    def _expand(self, kind: str, payload: object) -> np.ndarray:
        key = _digest64(self.model_id, self.seed, kind, payload)
        v = np.random.default_rng(np.random.SeedSequence(key)).standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def encode_text(self, prompts: Sequence[str]) -> np.ndarray:
        return np.stack([self._expand("text", p) for p in prompts])

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        prepared = prepare_image(image, self.native_size)
        return self._expand("image", prepared.tobytes())


@dataclass
class DevDiffusion:
    """Procedural stand-in generator: colorized depth plus seeded noise.

    Output is a uint8 RGB image of the input's height and width;
    (depth, prompt, seed, steps, guidance) fully determine the pixels,
    so repeat requests reproduce bit-exactly and seed changes do not.
    Noise amplitude shrinks with step count, mimicking longer sampling.
    """

    seed: int = 0
    model_id: str = "dev/procedural-diffusion"

    def style_transfer(
        self, depth: np.ndarray, prompt: str, seed: int, steps: int, guidance: float
    ) -> np.ndarray:
        d = np.asarray(depth)
        gray = d.mean(axis=2) if d.ndim == 3 else d.astype(np.float64)
        key = _digest64(self.model_id, self.seed, prompt, int(seed), int(steps), repr(float(guidance)))
        rng = np.random.default_rng(np.random.SeedSequence(key))
        tint = rng.uniform(0.4, 1.0, size=3)
        strength = guidance / (guidance + 4.0)
        base = gray[..., None] * ((1.0 - strength) + strength * tint)
        noise = rng.normal(0.0, 36.0 / float(steps), size=base.shape)
        return np.clip(np.rint(base + noise), 0.0, 255.0).astype(np.uint8)


class OpenClipEncoder:
    """Contrastive encoder loaded through open_clip (ResNet and ViT towers)."""

    def __init__(self, arch: str, pretrained: str, device: str = "cpu", cache_dir: str | None = None):
        import open_clip
        import torch

        self._torch = torch
        self.model_id = f"open_clip:{arch}/{pretrained}"
        self.device = device
        model, _, preprocess = open_clip.create_model_and_transforms(
            arch, pretrained=pretrained, cache_dir=cache_dir
        )
        self._model = model.to(device).eval()
        self._preprocess = preprocess
        self._tokenizer = open_clip.get_tokenizer(arch)
        size = getattr(self._model.visual, "image_size", 224)
        self.native_size = int(size if isinstance(size, int) else size[0])
        with torch.no_grad():
            probe = self._model.encode_text(self._tokenizer(["probe"]).to(device))
        self.dim = int(probe.shape[1])

    def encode_text(self, prompts: Sequence[str]) -> np.ndarray:
        torch = self._torch
        tokens = self._tokenizer(list(prompts)).to(self.device)
        with torch.no_grad():
            feats = self._model.encode_text(tokens)
        arr = feats.cpu().double().numpy()
        return arr / np.linalg.norm(arr, axis=1, keepdims=True)

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        torch = self._torch
        prepared = Image.fromarray(prepare_image(image, self.native_size), mode="RGB")
        batch = self._preprocess(prepared).unsqueeze(0).to(self.device)
        with torch.no_grad():
            feats = self._model.encode_image(batch)
        vec = feats[0].cpu().double().numpy()
        return vec / np.linalg.norm(vec)


class TransformersClipEncoder:
    """Contrastive encoder loaded from a transformers CLIP checkpoint."""

    def __init__(
        self,
        model_id: str,
        device: str = "cpu",
        cache_dir: str | None = None,
        local_only: bool = False,
    ):
        import torch
        from transformers import CLIPModel, CLIPProcessor

        self._torch = torch
        self.model_id = model_id
        self.device = device
        self._model = (
            CLIPModel.from_pretrained(model_id, cache_dir=cache_dir, local_files_only=local_only)
            .to(device)
            .eval()
        )
        self._processor = CLIPProcessor.from_pretrained(
            model_id, cache_dir=cache_dir, local_files_only=local_only
        )
        self.dim = int(self._model.config.projection_dim)
        size = getattr(self._processor, "image_processor", self._processor).size
        self.native_size = int(size.get("shortest_edge") or size.get("height") or 224)

    def encode_text(self, prompts: Sequence[str]) -> np.ndarray:
        torch = self._torch
        tokens = self._processor(
            text=list(prompts), return_tensors="pt", padding=True, truncation=True
        )
        with torch.no_grad():
            feats = self._model.get_text_features(
                **{k: v.to(self.device) for k, v in tokens.items()}
            )
        arr = feats.cpu().double().numpy()
        return arr / np.linalg.norm(arr, axis=1, keepdims=True)

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        torch = self._torch
        prepared = Image.fromarray(prepare_image(image, self.native_size), mode="RGB")
        inputs = self._processor(images=prepared, return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(pixel_values=inputs["pixel_values"].to(self.device))
        vec = feats[0].cpu().double().numpy()
        return vec / np.linalg.norm(vec)


class ControlNetDiffusion:
    """Depth-conditioned generator via a diffusers ControlNet pipeline.

    Generation runs at the nearest multiple-of-8 canvas, then the result
    is resized back so the response always matches the request's pixel
    dimensions.
    """

    BASE_ID = "runwayml/stable-diffusion-v1-5"

    def __init__(
        self,
        model_id: str,
        device: str = "cpu",
        cache_dir: str | None = None,
        local_only: bool = False,
    ):
        import torch
        from diffusers import ControlNetModel, StableDiffusionControlNetPipeline

        self._torch = torch
        self.model_id = model_id
        self.device = device
        adapter = ControlNetModel.from_pretrained(
            model_id, cache_dir=cache_dir, local_files_only=local_only
        )
        self._pipe = StableDiffusionControlNetPipeline.from_pretrained(
            self.BASE_ID,
            controlnet=adapter,
            cache_dir=cache_dir,
            local_files_only=local_only,
            safety_checker=None,
        ).to(device)

    def style_transfer(
        self, depth: np.ndarray, prompt: str, seed: int, steps: int, guidance: float
    ) -> np.ndarray:
        d = np.asarray(depth)
        h, w = d.shape[:2]
        rgb = d if d.ndim == 3 else np.stack([d, d, d], axis=-1)
        gen_w = max(64, -(-w // 8) * 8)
        gen_h = max(64, -(-h // 8) * 8)
        cond = Image.fromarray(rgb, mode="RGB").resize((gen_w, gen_h), Image.BICUBIC)
        generator = self._torch.Generator(device=self.device).manual_seed(int(seed))
        out = self._pipe(
            prompt,
            image=cond,
            num_inference_steps=int(steps),
            guidance_scale=float(guidance),
            generator=generator,
        ).images[0]
        if out.size != (w, h):
            out = out.resize((w, h), Image.BICUBIC)
        return np.asarray(out.convert("RGB"), dtype=np.uint8)


def _dev_encoder(config: ServiceConfig) -> DevEncoder:
    return DevEncoder(dim=config.dev_dim, seed=config.dev_seed)


def resolve_encoder(config: ServiceConfig) -> tuple[Encoder, list[str]]:
    """Load the configured encoder; fall back to the dev one if allowed.

    Returns (encoder, notes); notes describe any substitution so the
    caller can log it and /health reports the id actually served.
    """
    if config.encoder_id == DEV_ID:
        return _dev_encoder(config), []
    try:
        if config.encoder_id.startswith("open_clip:"):
            arch, _, tag = config.encoder_id.removeprefix("open_clip:").partition("/")
            return OpenClipEncoder(arch, tag or "openai", config.device, config.cache_dir), []
        return (
            TransformersClipEncoder(
                config.encoder_id, config.device, config.cache_dir, config.local_only
            ),
            [],
        )
    except Exception as exc:
        if not config.allow_fallback:
            raise
        fallback = _dev_encoder(config)
        note = (
            f"encoder {config.encoder_id!r} unavailable ({type(exc).__name__}: {exc}); "
            f"serving {fallback.model_id}"
        )
        return fallback, [note]


def resolve_diffusion(config: ServiceConfig) -> tuple[Generator, list[str]]:
    """Load the configured generator; fall back to the dev one if allowed."""
    if config.diffusion_id == DEV_ID:
        return DevDiffusion(seed=config.dev_seed), []
    try:
        return (
            ControlNetDiffusion(
                config.diffusion_id, config.device, config.cache_dir, config.local_only
            ),
            [],
        )
    except Exception as exc:
        if not config.allow_fallback:
            raise
        fallback = DevDiffusion(seed=config.dev_seed)
        note = (
            f"generator {config.diffusion_id!r} unavailable ({type(exc).__name__}: {exc}); "
            f"serving {fallback.model_id}"
        )
        return fallback, [note]
