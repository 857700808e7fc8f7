"""Dataset discovery (`root/class/split/*.off|*.xyz`) and prediction scoring."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "DatasetItem",
    "DatasetManifest",
    "scan_dataset",
    "evaluate",
    "format_report",
    "write_report",
]

GEOMETRY_SUFFIXES = (".off", ".xyz")


@dataclass(frozen=True)
class DatasetItem:
    object_id: str
    path: Path
    label: str


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    split: str
    classes: tuple[str, ...]
    items: tuple[DatasetItem, ...]

    def __post_init__(self):
        known = set(self.classes)
        ids = set()
        for it in self.items:
            if it.label not in known:
                raise ValueError(f"item {it.object_id} has unknown label {it.label!r}")
            if it.object_id in ids:
                raise ValueError(f"duplicate object id {it.object_id}")
            ids.add(it.object_id)


def scan_dataset(root: str | Path, split: str = "test") -> DatasetManifest:
    """Enumerate `root/<class>/<split>/*` deterministically (sorted names).

    Object ids are `<class>__<file stem>`. Both .off meshes and .xyz
    clouds are listed; the consumer dispatches on the suffix.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    classes = tuple(sorted(p.name for p in root.iterdir() if p.is_dir()))
    if not classes:
        raise ValueError(f"no class directories under {root}")
    items: list[DatasetItem] = []
    for cls in classes:
        split_dir = root / cls / split
        if not split_dir.is_dir():
            raise FileNotFoundError(f"missing split directory {split_dir}")
        for path in sorted(split_dir.iterdir()):
            if path.suffix.lower() in GEOMETRY_SUFFIXES:
                items.append(DatasetItem(object_id=f"{cls}__{path.stem}", path=path, label=cls))
    if not items:
        raise ValueError(f"no geometry files under {root} for split {split!r}")
    return DatasetManifest(root=root, split=split, classes=classes, items=tuple(items))


def evaluate(csv_path: str | Path, manifest: DatasetManifest) -> dict:
    """Score a predictions CSV against the manifest labels.

    Returns per-strategy overall accuracy, per-class accuracy, and a
    truth x predicted confusion matrix over manifest class order.
    """
    csv_path = Path(csv_path)
    labels = {it.object_id: it.label for it in manifest.items}
    index = {c: i for i, c in enumerate(manifest.classes)}
    k = len(manifest.classes)

    by_strategy: dict[str, dict] = {}
    seen: set[tuple[str, str]] = set()
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            oid, strategy, predicted = row["object_id"], row["strategy"], row["predicted"]
            if oid not in labels:
                raise ValueError(f"prediction for unknown id {oid}")
            if (oid, strategy) in seen:
                raise ValueError(f"duplicate prediction for {oid} ({strategy})")
            seen.add((oid, strategy))
            truth = row["truth"]
            if truth != labels[oid]:
                raise ValueError(f"truth mismatch for {oid}: CSV {truth!r}, manifest {labels[oid]!r}")
            if predicted not in index:
                raise ValueError(f"unknown predicted class {predicted!r} for {oid}")
            s = by_strategy.setdefault(
                strategy, {"confusion": [[0] * k for _ in range(k)], "n": 0, "correct": 0}
            )
            s["confusion"][index[truth]][index[predicted]] += 1
            s["n"] += 1
            s["correct"] += int(predicted == truth)
    if not by_strategy:
        raise ValueError(f"no prediction rows in {csv_path}")

    report: dict = {"classes": list(manifest.classes), "strategies": {}}
    for strategy, s in sorted(by_strategy.items()):
        conf = s["confusion"]
        per_class = {}
        for c, i in index.items():
            total = sum(conf[i])
            per_class[c] = (conf[i][i] / total) if total else None
        report["strategies"][strategy] = {
            "accuracy": s["correct"] / s["n"],
            "n": s["n"],
            "per_class_accuracy": per_class,
            "confusion": conf,
        }
    return report


def format_report(report: dict) -> str:
    """Render the evaluate() report as an aligned text table."""
    classes = report["classes"]
    lines = []
    for strategy, s in report["strategies"].items():
        lines.append(f"strategy {strategy}: accuracy {s['accuracy']:.4f} ({s['n']} items)")
        width = max(12, max(len(c) for c in classes) + 2)
        lines.append("  " + "class".ljust(width) + "accuracy")
        for c in classes:
            acc = s["per_class_accuracy"][c]
            lines.append("  " + c.ljust(width) + ("-" if acc is None else f"{acc:.4f}"))
        lines.append("  confusion (rows = truth, cols = predicted):")
        for c, row in zip(classes, s["confusion"]):
            lines.append("  " + c.ljust(width) + " ".join(f"{v:4d}" for v in row))
    return "\n".join(lines)


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
