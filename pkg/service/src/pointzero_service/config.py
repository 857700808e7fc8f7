"""Service configuration: model identities, device selection, server knobs.

Device and weight-cache locations can come from the environment
(POINTZERO_DEVICE, POINTZERO_CACHE) so deployments configure them
without touching code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

__all__ = [
    "ServiceConfig",
    "DEV_ID",
    "DEFAULT_ENCODER_ID",
    "DEFAULT_DIFFUSION_ID",
    "DEVICE_ENV",
    "CACHE_ENV",
]

# Selects the deterministic development backends instead of pretrained weights.
DEV_ID = "dev"

# ResNet-50 contrastive image/text encoder, open_clip naming (arch/pretrained tag).
DEFAULT_ENCODER_ID = "open_clip:RN50/openai"
# Depth-conditioned generator adapter; composed with its base model at load time.
DEFAULT_DIFFUSION_ID = "lllyasviel/sd-controlnet-depth"

DEVICE_ENV = "POINTZERO_DEVICE"
CACHE_ENV = "POINTZERO_CACHE"


def _env_device() -> str:
    return os.environ.get(DEVICE_ENV, "cpu")


def _env_cache() -> str | None:
    return os.environ.get(CACHE_ENV) or None


@dataclass(frozen=True)
class ServiceConfig:
    """Everything a running service needs; validated on construction.

    encoder_id / diffusion_id name pretrained checkpoints, or "dev" for
    the deterministic fallbacks. dev_dim and dev_seed only affect the
    fallbacks; pretrained encoders report their own width.
    """

    encoder_id: str = DEFAULT_ENCODER_ID
    diffusion_id: str = DEFAULT_DIFFUSION_ID
    device: str = field(default_factory=_env_device)
    port: int = 8000
    steps: int = 20
    guidance: float = 7.5
    dev_dim: int = 1024
    dev_seed: int = 0
    max_image_bytes: int = 8 * 1024 * 1024
    allow_fallback: bool = True
    local_only: bool = False
    cache_dir: str | None = field(default_factory=_env_cache)

    def __post_init__(self) -> None:
        if not self.encoder_id:
            raise ValueError("encoder_id must be nonempty")
        if not self.diffusion_id:
            raise ValueError("diffusion_id must be nonempty")
        if not self.device:
            raise ValueError("device must be nonempty")
        if not (1024 <= self.port <= 65535):
            raise ValueError(f"port must be in [1024, 65535], got {self.port}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.guidance > 0:
            raise ValueError(f"guidance must be positive, got {self.guidance}")
        if self.dev_dim < 2:
            raise ValueError(f"dev_dim must be >= 2, got {self.dev_dim}")
        if self.max_image_bytes < 4096:
            raise ValueError(f"max_image_bytes must be >= 4096, got {self.max_image_bytes}")
