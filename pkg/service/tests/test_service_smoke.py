"""Directional accuracy with a real pretrained encoder, when available.

The dev fallback carries no semantic signal, so an accuracy check only
means anything against real weights. Without cached weights or without
a dataset the test skips and says exactly why; when both are present it
runs the full pipeline over HTTP on 2 objects per class and requires
better-than-chance accuracy, nothing more.
"""

import os
import shutil
import time
from pathlib import Path

import pytest

from pointzero_service import ServiceConfig, create_app
from pointzero_service.config import DEV_ID
from pointzero_service.models import TransformersClipEncoder
from pointzero_service.testing import serve

ENCODER_ENV = "POINTZERO_SMOKE_ENCODER"
DATASET_ENV = "POINTZERO_MODELNET10_ROOT"
PER_CLASS = 2
MIN_OBJECTS = 20


def _skip(capsys, reason: str):
    with capsys.disabled():
        print(f"[acceptance] SKIP smoke accuracy: {reason}")
    pytest.skip(reason)


def test_smoke_accuracy_real_encoder(tmp_path, capsys):
    root = os.environ.get(DATASET_ENV, "")
    if not root or not Path(root).is_dir():
        _skip(capsys, f"no ModelNet10-style dataset; set {DATASET_ENV} to its root")
    encoder_id = os.environ.get(ENCODER_ENV, "openai/clip-vit-base-patch32")
    try:
        TransformersClipEncoder(encoder_id, device="cpu", local_only=True)
    except Exception as exc:
        _skip(capsys, f"pretrained encoder {encoder_id!r} not cached locally ({type(exc).__name__})")

    from pointzero.dataset import evaluate, scan_dataset
    from pointzero.pipeline import RunConfig, run_pipeline

    by_class: dict[str, list] = {}
    for item in scan_dataset(Path(root), split="test").items:
        by_class.setdefault(item.label, []).append(item)
    subset = tmp_path / "subset"
    picked = 0
    for cls in sorted(by_class)[:10]:
        for item in by_class[cls][:PER_CLASS]:
            dst = subset / cls / "test" / item.path.name
            dst.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(item.path, dst)
            picked += 1
    assert picked >= MIN_OBJECTS, f"need {MIN_OBJECTS} objects, dataset provided {picked}"

    config = ServiceConfig(
        encoder_id=encoder_id, diffusion_id=DEV_ID, local_only=True, allow_fallback=False
    )
    manifest = scan_dataset(subset, split="test")
    t0 = time.perf_counter()
    with serve(create_app(config)) as url:
        run = RunConfig(views="single-best", backend=url, skip_diffusion=True, seed=0)
        result = run_pipeline(manifest, run, tmp_path / "out")
    assert result.exit_code == 0, f"pipeline failures: {result.failures}"

    report = evaluate(tmp_path / "out" / "predictions.csv", manifest)
    accuracy = report["strategies"]["sum"]["accuracy"]
    elapsed = time.perf_counter() - t0
    assert accuracy > 0.10, f"accuracy {accuracy:.4f} not better than chance"
    with capsys.disabled():
        print(
            f"[acceptance] PASS smoke accuracy "
            f"({picked} objects, accuracy {accuracy:.4f} > 0.10; {elapsed:.2f}s)"
        )
