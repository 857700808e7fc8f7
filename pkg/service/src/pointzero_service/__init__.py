"""Reference HTTP service for the encoding and style-transfer wire protocol."""

from .app import ApiError, SerialExecutor, create_app
from .config import DEFAULT_DIFFUSION_ID, DEFAULT_ENCODER_ID, DEV_ID, ServiceConfig
from .models import DevDiffusion, DevEncoder, prepare_image, resolve_diffusion, resolve_encoder

__version__ = "0.1.0"

__all__ = [
    "ApiError",
    "SerialExecutor",
    "create_app",
    "ServiceConfig",
    "DEV_ID",
    "DEFAULT_ENCODER_ID",
    "DEFAULT_DIFFUSION_ID",
    "DevEncoder",
    "DevDiffusion",
    "prepare_image",
    "resolve_encoder",
    "resolve_diffusion",
    "__version__",
]
