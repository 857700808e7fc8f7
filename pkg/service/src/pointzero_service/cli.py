"""Command line launcher: builds a ServiceConfig and serves it with uvicorn."""

from __future__ import annotations

import argparse
import logging
import sys

import uvicorn

from .app import create_app
from .config import CACHE_ENV, DEFAULT_DIFFUSION_ID, DEFAULT_ENCODER_ID, DEV_ID, DEVICE_ENV, ServiceConfig

__all__ = ["build_parser", "config_from_args", "main"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pointzero-service",
        description="Serve the encoding and depth-conditioned generation wire protocol.",
    )
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--encoder", default=DEFAULT_ENCODER_ID, help="encoder checkpoint id, or 'dev'")
    p.add_argument("--diffusion", default=DEFAULT_DIFFUSION_ID, help="generator checkpoint id, or 'dev'")
    p.add_argument("--dev", action="store_true", help="serve the deterministic development backends")
    p.add_argument("--device", default=None, help=f"compute device (default ${DEVICE_ENV} or cpu)")
    p.add_argument("--cache-dir", default=None, help=f"weight cache root (default ${CACHE_ENV})")
    p.add_argument("--steps", type=int, default=20, help="default sampling steps")
    p.add_argument("--guidance", type=float, default=7.5, help="default guidance scale")
    p.add_argument("--dev-dim", type=int, default=1024, help="embedding width of the dev encoder")
    p.add_argument("--dev-seed", type=int, default=0)
    p.add_argument("--no-fallback", action="store_true", help="fail instead of substituting dev backends")
    p.add_argument("--local-only", action="store_true", help="never download weights")
    p.add_argument("--log-level", default="info", choices=["debug", "info", "warning", "error"])
    return p


def config_from_args(args: argparse.Namespace) -> ServiceConfig:
    kwargs = dict(
        encoder_id=DEV_ID if args.dev else args.encoder,
        diffusion_id=DEV_ID if args.dev else args.diffusion,
        port=args.port,
        steps=args.steps,
        guidance=args.guidance,
        dev_dim=args.dev_dim,
        dev_seed=args.dev_seed,
        allow_fallback=not args.no_fallback,
        local_only=args.local_only,
    )
    if args.device:
        kwargs["device"] = args.device
    if args.cache_dir:
        kwargs["cache_dir"] = args.cache_dir
    return ServiceConfig(**kwargs)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
    try:
        config = config_from_args(args)
        app = create_app(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(app, host=args.host, port=config.port, log_level=args.log_level)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
