"""Dataset discovery and prediction-CSV scoring."""

import csv
import json
from pathlib import Path

import pytest

from pointzero.dataset import (
    DatasetItem,
    DatasetManifest,
    evaluate,
    format_report,
    scan_dataset,
    write_report,
)


def make_tree(root: Path, layout: dict[str, list[str]], split: str = "test") -> None:
    for cls, files in layout.items():
        d = root / cls / split
        d.mkdir(parents=True)
        for name in files:
            (d / name).write_text("OFF\n0 0 0\n")


def write_csv(path: Path, rows: list[dict]) -> None:
    fields = ["object_id", "strategy", "predicted", "truth"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def row(oid, strategy, predicted, truth):
    return {"object_id": oid, "strategy": strategy, "predicted": predicted, "truth": truth}


class TestScanDataset:
    def test_enumerates_sorted(self, tmp_path):
        make_tree(tmp_path, {"chair": ["b.off", "a.off"], "table": ["x.xyz"]})
        m = scan_dataset(tmp_path)
        assert m.classes == ("chair", "table")
        assert [it.object_id for it in m.items] == ["chair__a", "chair__b", "table__x"]
        assert [it.label for it in m.items] == ["chair", "chair", "table"]
        assert all(it.path.exists() for it in m.items)

    def test_filters_non_geometry(self, tmp_path):
        make_tree(tmp_path, {"chair": ["a.off", "notes.txt", "b.XYZ"]})
        m = scan_dataset(tmp_path)
        assert [it.object_id for it in m.items] == ["chair__a", "chair__b"]

    def test_split_selection(self, tmp_path):
        make_tree(tmp_path, {"chair": ["a.off"]}, split="train")
        (tmp_path / "chair" / "test").mkdir()
        (tmp_path / "chair" / "test" / "b.off").write_text("OFF\n0 0 0\n")
        assert [it.object_id for it in scan_dataset(tmp_path, split="train").items] == ["chair__a"]
        assert [it.object_id for it in scan_dataset(tmp_path, split="test").items] == ["chair__b"]

    def test_missing_root(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="does not exist"):
            scan_dataset(tmp_path / "nope")

    def test_missing_split_dir(self, tmp_path):
        make_tree(tmp_path, {"chair": ["a.off"]}, split="train")
        with pytest.raises(FileNotFoundError, match="missing split directory"):
            scan_dataset(tmp_path, split="test")

    def test_no_classes(self, tmp_path):
        with pytest.raises(ValueError, match="no class directories"):
            scan_dataset(tmp_path)

    def test_no_geometry(self, tmp_path):
        make_tree(tmp_path, {"chair": ["notes.txt"]})
        with pytest.raises(ValueError, match="no geometry files"):
            scan_dataset(tmp_path)

    def test_generated_corpus(self, tmp_dataset):
        m = scan_dataset(tmp_dataset)
        assert m.classes == ("blocks1", "blocks2", "blocks3")
        assert len(m.items) == 6

    def test_manifest_invariants(self, tmp_path):
        item = DatasetItem(object_id="a__x", path=tmp_path, label="zebra")
        with pytest.raises(ValueError, match="unknown label"):
            DatasetManifest(root=tmp_path, split="test", classes=("a",), items=(item,))
        dup = DatasetItem(object_id="a__x", path=tmp_path, label="a")
        with pytest.raises(ValueError, match="duplicate object id"):
            DatasetManifest(root=tmp_path, split="test", classes=("a",), items=(dup, dup))


def tiny_manifest(tmp_path) -> DatasetManifest:
    make_tree(tmp_path, {"ant": ["a.off", "b.off"], "bee": ["c.off", "d.off"]})
    return scan_dataset(tmp_path)


class TestEvaluate:
    def test_accuracy_and_confusion(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(
            tmp_path / "p.csv",
            [
                row("ant__a", "sum", "ant", "ant"),
                row("ant__b", "sum", "bee", "ant"),
                row("bee__c", "sum", "bee", "bee"),
                row("bee__d", "sum", "bee", "bee"),
            ],
        )
        r = evaluate(tmp_path / "p.csv", m)
        s = r["strategies"]["sum"]
        assert s["accuracy"] == 0.75
        assert s["n"] == 4
        assert s["per_class_accuracy"] == {"ant": 0.5, "bee": 1.0}
        assert s["confusion"] == [[1, 1], [0, 2]]

    def test_multiple_strategies_scored_separately(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(
            tmp_path / "p.csv",
            [
                row("ant__a", "sum", "ant", "ant"),
                row("ant__a", "geo", "bee", "ant"),
            ],
        )
        r = evaluate(tmp_path / "p.csv", m)
        assert r["strategies"]["sum"]["accuracy"] == 1.0
        assert r["strategies"]["geo"]["accuracy"] == 0.0

    def test_class_without_rows_has_null_accuracy(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(tmp_path / "p.csv", [row("ant__a", "sum", "ant", "ant")])
        r = evaluate(tmp_path / "p.csv", m)
        assert r["strategies"]["sum"]["per_class_accuracy"]["bee"] is None

    def test_unknown_id_rejected(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(tmp_path / "p.csv", [row("zzz__9", "sum", "ant", "ant")])
        with pytest.raises(ValueError, match="unknown id"):
            evaluate(tmp_path / "p.csv", m)

    def test_duplicate_row_rejected(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(
            tmp_path / "p.csv",
            [row("ant__a", "sum", "ant", "ant"), row("ant__a", "sum", "bee", "ant")],
        )
        with pytest.raises(ValueError, match="duplicate prediction"):
            evaluate(tmp_path / "p.csv", m)

    def test_truth_mismatch_rejected(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(tmp_path / "p.csv", [row("ant__a", "sum", "ant", "bee")])
        with pytest.raises(ValueError, match="truth mismatch"):
            evaluate(tmp_path / "p.csv", m)

    def test_unknown_predicted_class_rejected(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(tmp_path / "p.csv", [row("ant__a", "sum", "wasp", "ant")])
        with pytest.raises(ValueError, match="unknown predicted class"):
            evaluate(tmp_path / "p.csv", m)

    def test_empty_csv_rejected(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(tmp_path / "p.csv", [])
        with pytest.raises(ValueError, match="no prediction rows"):
            evaluate(tmp_path / "p.csv", m)


class TestReportRendering:
    def _report(self, tmp_path):
        m = tiny_manifest(tmp_path)
        write_csv(
            tmp_path / "p.csv",
            [row("ant__a", "sum", "ant", "ant"), row("bee__c", "sum", "ant", "bee")],
        )
        return evaluate(tmp_path / "p.csv", m)

    def test_format_contains_summary(self, tmp_path):
        text = format_report(self._report(tmp_path))
        assert "strategy sum: accuracy 0.5000 (2 items)" in text
        assert "confusion" in text

    def test_write_report_json_round_trip(self, tmp_path):
        r = self._report(tmp_path)
        write_report(r, tmp_path / "report.json")
        assert json.loads((tmp_path / "report.json").read_text()) == r
