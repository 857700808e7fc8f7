"""Command-line interface.

Subcommands: `project` (geometry to depth PNGs), `classify` (depth PNGs
to predictions), `pipeline` (end to end), `evaluate` (accuracy report),
`export-logits` (per-guidance max-pooled logits CSV).

Exit codes: 0 success, 1 some items failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import BackendError
from .dataset import evaluate, format_report, scan_dataset, write_report
from .pipeline import (
    RunConfig,
    export_logits,
    run_classify,
    run_pipeline,
    run_project,
)
from .zeroshot import CLIP_TEMPLATE, DIFFUSION_TEMPLATE


def _add_geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset-root", required=True, help="root with <class>/<split>/*.off|*.xyz")
    p.add_argument("--split", default="test")
    p.add_argument("--views", default="single-best",
                   help="preset (single-best|four-view|eight-view) or comma-separated azimuths")
    p.add_argument("--beta-edge", type=float, default=0.02, help="length units per edge sample")
    p.add_argument("--beta-face", type=float, default=5e-4, help="area units per face sample")
    p.add_argument("--knn-k", type=int, default=4, help="neighbors for point-cloud densification")
    p.add_argument("--resolution", type=int, default=224, help="square raster size in pixels")
    p.add_argument("--limit-N", type=int, default=0, dest="limit_n",
                   help="process only the first N items")


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--backend-url", default=None, help="base URL of the encoding service")
    g.add_argument("--mock", action="store_true", help="hash-based in-process backend (default)")
    g.add_argument("--planted", action="store_true", help="oracle backend with decodable stamps")
    p.add_argument("--logit-scale", type=float, default=100.0)
    p.add_argument("--strategy", choices=("sum", "geo", "baseline"), default="sum")
    p.add_argument("--w-ratio", type=float, default=1.0,
                   help="w_glo / w_loc ratio for the sum strategy")
    p.add_argument("--clip-prompt", default=CLIP_TEMPLATE.pattern,
                   help="text prompt template containing [C] once")
    p.add_argument("--diffusion-prompt", default=DIFFUSION_TEMPLATE.pattern,
                   help="style prompt template containing [C] once")
    p.add_argument("--skip-diffusion", action="store_true",
                   help="encode depth maps directly, bypassing style transfer")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)


def _backend_name(args: argparse.Namespace) -> str:
    if args.backend_url:
        return args.backend_url
    if args.planted:
        return "planted"
    return "mock"


def _config(args: argparse.Namespace, backend: str = "mock") -> RunConfig:
    return RunConfig(
        views=getattr(args, "views", "single-best"),
        beta_edge=getattr(args, "beta_edge", 0.02),
        beta_face=getattr(args, "beta_face", 5e-4),
        knn_k=getattr(args, "knn_k", 4),
        resolution=getattr(args, "resolution", 224),
        backend=backend,
        logit_scale=getattr(args, "logit_scale", 100.0),
        strategy=getattr(args, "strategy", "sum"),
        w_glo=getattr(args, "w_ratio", 1.0),
        w_loc=1.0,
        clip_prompt=getattr(args, "clip_prompt", CLIP_TEMPLATE.pattern),
        diffusion_prompt=getattr(args, "diffusion_prompt", DIFFUSION_TEMPLATE.pattern),
        skip_diffusion=getattr(args, "skip_diffusion", False),
        seed=args.seed,
        limit_n=getattr(args, "limit_n", 0),
        workers=args.workers,
    )


def _cmd_project(args: argparse.Namespace) -> int:
    manifest = scan_dataset(args.dataset_root, args.split)
    result = run_project(manifest, _config(args), args.out_dir)
    print(f"projected {result.processed} items, {len(result.failures)} failed -> {result.csv_path}")
    return result.exit_code


def _cmd_classify(args: argparse.Namespace) -> int:
    config = _config(args, backend=_backend_name(args))
    classes = None
    labels = None
    if args.dataset_root:
        manifest = scan_dataset(args.dataset_root, args.split)
        classes = manifest.classes
        labels = {it.object_id: it.label for it in manifest.items}
    result = run_classify(args.depth_dir, config, args.out_dir, classes=classes, labels=labels)
    print(f"classified {result.processed} items, {len(result.failures)} failed -> {result.csv_path}")
    return result.exit_code


def _cmd_pipeline(args: argparse.Namespace) -> int:
    manifest = scan_dataset(args.dataset_root, args.split)
    config = _config(args, backend=_backend_name(args))
    result = run_pipeline(manifest, config, args.out_dir)
    print(
        f"pipeline: {result.processed} processed, {result.skipped} resumed, "
        f"{len(result.failures)} failed -> {result.csv_path}"
    )
    return result.exit_code


def _cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = scan_dataset(args.dataset_root, args.split)
    csv_path = Path(args.csv) if args.csv else Path(args.out_dir) / "predictions.csv"
    report = evaluate(csv_path, manifest)
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    out_json = Path(args.out_dir) / "metrics.json"
    write_report(report, out_json)
    print(format_report(report))
    print(f"metrics -> {out_json}")
    return 0


def _cmd_export_logits(args: argparse.Namespace) -> int:
    target = export_logits(args.out_dir, args.csv_out)
    print(f"logits -> {target}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointzero", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="render depth-map PNGs from geometry")
    _add_geometry_flags(p)
    _add_common_flags(p)
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("classify", help="classify existing depth PNGs")
    p.add_argument("--depth-dir", required=True, help="directory of {id}__{view}.png files")
    p.add_argument("--dataset-root", default=None, help="optional: pins class order and labels")
    p.add_argument("--split", default="test")
    _add_backend_flags(p)
    _add_common_flags(p)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("pipeline", help="run geometry to predictions end to end")
    _add_geometry_flags(p)
    _add_backend_flags(p)
    _add_common_flags(p)
    p.set_defaults(fn=_cmd_pipeline)

    p = sub.add_parser("evaluate", help="score a predictions CSV against the dataset")
    p.add_argument("--dataset-root", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--csv", default=None, help="defaults to <out-dir>/predictions.csv")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("export-logits", help="flatten per-guidance max-pooled logits to CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--csv-out", default=None)
    p.set_defaults(fn=_cmd_export_logits)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, NotADirectoryError, BackendError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
