"""End-to-end orchestration: geometry files to depth maps to predictions.

Every intermediate artifact is persisted under the output directory:

    config.json                              materialized run settings
    depth/{id}__{view}.png  depth/{id}.json  8-bit depth maps + sidecar
    styled/{id}__{view}__{class}.png         style-transfer outputs
    logits/{id}.json                         per-view and max-pooled logits
    probmat/{id}.json                        K x K probability matrix
    fused/{id}.json                          fused score vector
    predictions.csv                          object_id,strategy,predicted,truth,p_*

Runs are resumable (items with a final CSV row for the run's strategy are
skipped) and deterministic: a completed run rewrites the CSV in manifest
order, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backends import (
    Backend,
    BackendConfig,
    MockBackend,
    RemoteBackend,
    planted_mock,
)
from .dataset import DatasetManifest
from .geometry import PointCloud, normalize_unit, parse_off, parse_points
from .images import encode_png
from .projection import RasterConfig, ViewConfig, maxpool_densify, project, to_image8, view_preset
from .rng import hash64
from .sampling import SamplingParams, knn_densify, sample_mesh
from .zeroshot import (
    CLIP_TEMPLATE,
    DIFFUSION_TEMPLATE,
    PromptTemplate,
    aggregate_probability_matrix,
    build_text_classifier,
    fuse_baseline,
    fuse_strategy_geo,
    fuse_strategy_sum,
    image_logits,
    predict,
)

__all__ = [
    "RunConfig",
    "RunResult",
    "make_backend",
    "resolve_views",
    "run_pipeline",
    "run_project",
    "run_classify",
    "export_logits",
]


@dataclass(frozen=True)
class RunConfig:
    """All pipeline settings; round-trips through JSON."""

    views: str = "single-best"
    beta_edge: float = 0.02
    beta_face: float = 5e-4
    knn_k: int = 4
    resolution: int = 224
    backend: str = "mock"
    mock_dim: int = 512
    logit_scale: float = 100.0
    strategy: str = "sum"
    w_glo: float = 1.0
    w_loc: float = 1.0
    clip_prompt: str = CLIP_TEMPLATE.pattern
    diffusion_prompt: str = DIFFUSION_TEMPLATE.pattern
    skip_diffusion: bool = False
    seed: int = 0
    limit_n: int = 0
    workers: int = 1
    timeout: float = 60.0
    max_inflight: int = 4

    def __post_init__(self):
        if self.strategy not in ("sum", "geo", "baseline"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.limit_n < 0:
            raise ValueError(f"limit_n must be >= 0, got {self.limit_n}")
        resolve_views(self.views)
        SamplingParams(self.beta_edge, self.beta_face, self.seed)
        RasterConfig(width=self.resolution, height=self.resolution)
        PromptTemplate(self.clip_prompt, "clip-text")
        PromptTemplate(self.diffusion_prompt, "diffusion-style")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))

    def raster(self) -> RasterConfig:
        return RasterConfig(width=self.resolution, height=self.resolution)

    def sampling_for(self, object_id: str) -> SamplingParams:
        return SamplingParams(self.beta_edge, self.beta_face, hash64(self.seed, "sample", object_id))


def resolve_views(views: str) -> list[ViewConfig]:
    """A preset name, or comma-separated azimuth degrees at elevation 35."""
    try:
        return view_preset(views)
    except ValueError:
        pass
    try:
        azimuths = [float(tok) for tok in views.split(",") if tok.strip()]
    except ValueError:
        azimuths = []
    if not azimuths:
        raise ValueError(f"views must be a preset name or comma-separated azimuths, got {views!r}")
    return [ViewConfig(azimuth=a) for a in azimuths]


def make_backend(config: RunConfig, classes) -> Backend:
    if config.backend == "mock":
        return MockBackend(dim=config.mock_dim, seed=config.seed)
    if config.backend == "planted":
        return planted_mock(classes, dim=config.mock_dim, seed=config.seed)
    return RemoteBackend(
        BackendConfig(
            endpoint=config.backend,
            timeout=config.timeout,
            max_inflight=config.max_inflight,
            logit_scale=config.logit_scale,
        )
    )


@dataclass
class RunResult:
    csv_path: Path
    processed: int
    skipped: int
    failures: list[tuple[str, str]]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_geometry(path: Path, object_id: str):
    text = path.read_text()
    if path.suffix.lower() == ".off":
        return parse_off(text)
    return parse_points(text, source_id=object_id)


def _depth_images(item_path: Path, object_id: str, config: RunConfig,
                  views: list[ViewConfig], out_dir: Path) -> list[np.ndarray]:
    """Parse, normalize, sample/densify, project and save one item's views."""
    geom = _load_geometry(item_path, object_id)
    raw = geom.vertices if hasattr(geom, "vertices") else geom.points
    center = (raw.min(axis=0) + raw.max(axis=0)) / 2.0
    radius = float(np.sqrt(((raw - center) ** 2).sum(axis=1)).max())

    geom = normalize_unit(geom)
    params = config.sampling_for(object_id)
    if hasattr(geom, "faces"):
        cloud = sample_mesh(geom, params)
    else:
        cloud = knn_densify(geom, config.knn_k, params)
    cloud = PointCloud(points=cloud.points, source_id=object_id)

    raster = config.raster()
    depth_dir = out_dir / "depth"
    depth_dir.mkdir(parents=True, exist_ok=True)
    images = []
    for view in views:
        dm = maxpool_densify(project(cloud, view, raster))
        img = to_image8(dm)
        (depth_dir / f"{object_id}__{view.label}.png").write_bytes(encode_png(img))
        images.append(img)
    _dump_json(
        depth_dir / f"{object_id}.json",
        {
            "object_id": object_id,
            "source_path": str(item_path),
            "normalization": {"center": [float(x) for x in center], "radius": radius},
            "views": [dataclasses.asdict(v) for v in views],
            "raster": dataclasses.asdict(raster),
            "sampling": {"beta_edge": config.beta_edge, "beta_face": config.beta_face,
                         "knn_k": config.knn_k, "seed": params.seed},
        },
    )
    return images


def _classify_item(object_id: str, depth_images: list[np.ndarray], view_labels: list[str],
                   backend: Backend, classifier, config: RunConfig, out_dir: Path) -> np.ndarray:
    """Style-transfer/encode/fuse one item's views; returns the fused vector."""
    classes = classifier.classes
    k = len(classes)
    diffusion = PromptTemplate(config.diffusion_prompt, "diffusion-style")
    run_diffusion = not config.skip_diffusion and config.strategy != "baseline"

    view_rows = []  # guidance-free depth logits, used by baseline and skip paths
    tensor = np.empty((len(view_labels), k, k))
    for i, (label, img) in enumerate(zip(view_labels, depth_images)):
        if run_diffusion:
            styled_dir = out_dir / "styled"
            styled_dir.mkdir(parents=True, exist_ok=True)
            for j, cls in enumerate(classes):
                prompt = diffusion.render(cls)
                seed = hash64(object_id, label, cls)
                styled = backend.style_transfer(img, prompt, seed)
                (styled_dir / f"{object_id}__{label}__{cls}.png").write_bytes(
                    encode_png(styled)
                )
                tensor[i, j] = image_logits(backend.encode_image(styled), classifier,
                                            config.logit_scale)
            view_rows.append(None)
        else:
            row = image_logits(backend.encode_image(img), classifier, config.logit_scale)
            tensor[i, :, :] = row[None, :]
            view_rows.append(row)

    maxp = tensor.max(axis=0)
    pm = aggregate_probability_matrix(tensor, classes)
    for sub, payload in (
        ("logits", {"classes": list(classes), "view_labels": list(view_labels),
                    "logit_scale": config.logit_scale,
                    "maxp": maxp.tolist(),
                    "views": [tensor[i].tolist() for i in range(len(view_labels))]}),
        ("probmat", {"classes": list(classes), "P": pm.P.tolist()}),
    ):
        d = out_dir / sub
        d.mkdir(parents=True, exist_ok=True)
        _dump_json(d / f"{object_id}.json", payload)

    if config.strategy == "sum":
        fused = fuse_strategy_sum(pm, config.w_glo, config.w_loc)
    elif config.strategy == "geo":
        fused = fuse_strategy_geo(pm)
    else:
        fused = fuse_baseline(np.stack(view_rows))
    d = out_dir / "fused"
    d.mkdir(parents=True, exist_ok=True)
    _dump_json(d / f"{object_id}.json",
               {"strategy": config.strategy, "classes": list(classes), "p": fused.tolist()})
    return fused


def _read_existing_rows(csv_path: Path) -> list[dict]:
    if not csv_path.exists():
        return []
    with open(csv_path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_rows(csv_path: Path, fieldnames: list[str], rows: list[dict]) -> None:
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def run_pipeline(manifest: DatasetManifest, config: RunConfig, out_dir: str | Path,
                 backend: Backend | None = None) -> RunResult:
    """Process every manifest item; isolate per-item failures; resume by CSV.

    On a fully successful run the predictions CSV is rewritten in manifest
    order so repeated runs produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config.to_json())

    views = resolve_views(config.views)
    if backend is None:
        backend = make_backend(config, manifest.classes)
    classifier = build_text_classifier(
        manifest.classes, PromptTemplate(config.clip_prompt, "clip-text"), backend
    )
    k = len(manifest.classes)
    fieldnames = ["object_id", "strategy", "predicted", "truth"] + [f"p_{i}" for i in range(k)]

    csv_path = out / "predictions.csv"
    existing = _read_existing_rows(csv_path)
    done = {(r["object_id"], r["strategy"]) for r in existing}

    items = list(manifest.items)
    if config.limit_n:
        items = items[: config.limit_n]

    rows = list(existing)
    if not existing:
        _write_rows(csv_path, fieldnames, [])
    lock = threading.Lock()
    failures: list[tuple[str, str]] = []
    processed = skipped = 0

    def handle(item) -> None:
        nonlocal processed, skipped
        if (item.object_id, config.strategy) in done:
            with lock:
                skipped += 1
            return
        try:
            images = _depth_images(item.path, item.object_id, config, views, out)
            fused = _classify_item(item.object_id, images, [v.label for v in views],
                                   backend, classifier, config, out)
            name, _ = predict(fused, manifest.classes)
        except Exception as exc:
            with lock:
                failures.append((item.object_id, f"{type(exc).__name__}: {exc}"))
                print(f"error: {item.object_id}: {exc}", file=sys.stderr)
            return
        row = {"object_id": item.object_id, "strategy": config.strategy,
               "predicted": name, "truth": item.label}
        row.update({f"p_{i}": repr(float(v)) for i, v in enumerate(fused)})
        with lock:
            rows.append(row)
            processed += 1
            with open(csv_path, "a", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
                w.writerow(row)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(handle, items))
    else:
        for item in items:
            handle(item)

    if not failures:
        order = {it.object_id: i for i, it in enumerate(manifest.items)}
        rows.sort(key=lambda r: (order.get(r["object_id"], len(order)), r["strategy"]))
        _write_rows(csv_path, fieldnames, rows)
    return RunResult(csv_path=csv_path, processed=processed, skipped=skipped, failures=failures)


def run_project(manifest: DatasetManifest, config: RunConfig, out_dir: str | Path) -> RunResult:
    """Geometry-to-depth-PNG stage only, with per-item failure isolation."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config.to_json())
    views = resolve_views(config.views)
    items = list(manifest.items)
    if config.limit_n:
        items = items[: config.limit_n]
    failures: list[tuple[str, str]] = []
    processed = 0
    for item in items:
        try:
            _depth_images(item.path, item.object_id, config, views, out)
            processed += 1
        except Exception as exc:
            failures.append((item.object_id, f"{type(exc).__name__}: {exc}"))
            print(f"error: {item.object_id}: {exc}", file=sys.stderr)
    return RunResult(csv_path=out / "depth", processed=processed, skipped=0, failures=failures)


def run_classify(depth_dir: str | Path, config: RunConfig, out_dir: str | Path,
                 classes=None, labels: dict[str, str] | None = None,
                 backend: Backend | None = None) -> RunResult:
    """Classify already-rendered depth PNGs named `{id}__{view}.png`.

    Classes and truth labels default to the id prefix before the first
    `__` separator; pass explicit `classes` to pin the class order.
    """
    from .images import decode_png

    depth_dir = Path(depth_dir)
    groups: dict[str, list[tuple[str, Path]]] = {}
    for path in sorted(depth_dir.glob("*.png")):
        object_id, view_label = path.stem.rsplit("__", 1)
        groups.setdefault(object_id, []).append((view_label, path))
    if not groups:
        raise FileNotFoundError(f"no depth PNGs under {depth_dir}")

    if classes is None:
        classes = sorted({oid.split("__", 1)[0] for oid in groups})
    classes = tuple(classes)
    if labels is None:
        labels = {oid: oid.split("__", 1)[0] for oid in groups}

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if backend is None:
        backend = make_backend(config, classes)
    classifier = build_text_classifier(
        classes, PromptTemplate(config.clip_prompt, "clip-text"), backend
    )
    fieldnames = ["object_id", "strategy", "predicted", "truth"] + [
        f"p_{i}" for i in range(len(classes))
    ]
    rows: list[dict] = []
    failures: list[tuple[str, str]] = []
    for object_id in sorted(groups):
        view_labels = [v for v, _ in groups[object_id]]
        try:
            images = [decode_png(p.read_bytes()) for _, p in groups[object_id]]
            fused = _classify_item(object_id, images, view_labels, backend, classifier,
                                   config, out)
            name, _ = predict(fused, classes)
        except Exception as exc:
            failures.append((object_id, f"{type(exc).__name__}: {exc}"))
            print(f"error: {object_id}: {exc}", file=sys.stderr)
            continue
        row = {"object_id": object_id, "strategy": config.strategy,
               "predicted": name, "truth": labels.get(object_id, "")}
        row.update({f"p_{i}": repr(float(v)) for i, v in enumerate(fused)})
        rows.append(row)
    csv_path = out / "predictions.csv"
    _write_rows(csv_path, fieldnames, rows)
    return RunResult(csv_path=csv_path, processed=len(rows), skipped=0, failures=failures)


def export_logits(out_dir: str | Path, csv_out: str | Path | None = None) -> Path:
    """Flatten saved max-pooled logits into one per-guidance-row CSV."""
    out = Path(out_dir)
    logits_dir = out / "logits"
    files = sorted(logits_dir.glob("*.json"))
    if not files:
        raise FileNotFoundError(f"no logits artifacts under {logits_dir}")
    target = Path(csv_out) if csv_out else out / "logits_export.csv"
    first = json.loads(files[0].read_text())
    classes = first["classes"]
    header = ["object_id", "guidance"] + [f"l_{i}" for i in range(len(classes))]
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for f in files:
            payload = json.loads(f.read_text())
            if payload["classes"] != classes:
                raise ValueError(f"class list mismatch in {f}")
            oid = f.stem
            for cls, row in zip(classes, payload["maxp"]):
                w.writerow([oid, cls] + [repr(float(v)) for v in row])
    return target
