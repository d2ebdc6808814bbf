import csv
import json
import logging

import numpy as np
import pytest
from PIL import Image

from ghho.cli import bench_optimizers, main
from ghho.config import ConfigError, load_config
from ghho.data import (
    DEFAULT_RECIPE,
    LabeledImage,
    apply_op,
    augment,
    fit_square,
    ingest,
    read_gray,
    synthetic_blobs,
    write_mask_pgm,
)
from ghho.errors import ContractViolation, DataError

TINY_CONFIG = {
    "network": {"input_size": 31, "conv_filters": [4, 4], "conv_kernels": [3, 3], "fc_units": 16},
    "optimizer": {"population": 10, "max_iterations": 30},
}


def save_png(path, array):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array).save(path)


@pytest.fixture
def blob_dir(tmp_path):
    root = tmp_path / "data"
    for item in synthetic_blobs(24, size=40, seed=3):
        save_png(root / ("yes" if item.label else "no") / f"{item.name}.png", item.image)
    return root


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


def test_read_gray_formats(tmp_path):
    rgb = np.zeros((4, 6, 3), np.uint8)
    rgb[..., 0] = 255
    Image.fromarray(rgb).save(tmp_path / "a.png")
    Image.fromarray(rgb).save(tmp_path / "a.jpg")
    gray = read_gray(tmp_path / "a.png")
    assert gray.shape == (4, 6) and gray[0, 0] == 76  # 0.299 * 255
    assert read_gray(tmp_path / "a.jpg").shape == (4, 6)
    write_mask_pgm(tmp_path / "m.pgm", np.eye(3, dtype=bool))
    assert (tmp_path / "m.pgm").read_bytes().startswith(b"P5\n3 3\n255\n")
    assert set(np.unique(read_gray(tmp_path / "m.pgm"))) == {0, 255}


def test_ingest_skips_corrupt_file(tmp_path, caplog):
    save_png(tmp_path / "yes" / "a.png", np.full((20, 30), 200, np.uint8))
    save_png(tmp_path / "no" / "b.png", np.full((50, 10), 10, np.uint8))
    (tmp_path / "no" / "c.png").write_bytes(b"not an image")
    with caplog.at_level(logging.WARNING):
        items = ingest(tmp_path)
    assert len(items) == 2
    assert sum("skipping" in r.message for r in caplog.records) == 1
    assert all(i.image.shape == (143, 143) for i in items)
    assert {i.label for i in items} == {0, 1}


def test_ingest_labels_file_and_errors(tmp_path):
    save_png(tmp_path / "x.png", np.zeros((8, 8), np.uint8))
    save_png(tmp_path / "y.png", np.zeros((8, 8), np.uint8))
    (tmp_path / "labels.csv").write_text("filename,label\nx.png,yes\ny.png,no\n")
    items = ingest(tmp_path, tmp_path / "labels.csv", size=31)
    assert [(i.name, i.label) for i in items] == [("x.png", 1), ("y.png", 0)]
    assert items[0].image.shape == (31, 31)
    with pytest.raises(DataError):
        ingest(tmp_path / "empty_nowhere")
    (tmp_path / "sub").mkdir()
    with pytest.raises(DataError):
        ingest(tmp_path / "sub")


def test_ingest_counts_match_folder_listing(blob_dir):
    items = ingest(blob_dir)
    assert sum(i.label for i in items) == len(list((blob_dir / "yes").iterdir()))
    assert len(items) - sum(i.label for i in items) == len(list((blob_dir / "no").iterdir()))


def test_fit_square_pads_then_resizes():
    img = np.full((10, 20), 255, np.uint8)
    out = fit_square(img, 20)
    assert out.shape == (20, 20) and out[0].max() == 0 and out[10].min() == 255


def test_augment_counts_and_involutions():
    items = [LabeledImage(f"i{k}", np.full((3, 3), k, np.uint8), k % 2) for k in range(248)]
    out = augment(items, DEFAULT_RECIPE, include_original=True)
    assert len(out) == 248 * 8 == 1984
    assert [o.label for o in out[:8]] == [0] * 8
    assert augment(items, (), include_original=True) == items
    assert len(augment(items[:5], ("flip_h", "flip_v"), include_original=False)) == 10

    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    np.testing.assert_array_equal(apply_op(apply_op(img, "rotate180"), "rotate180"), img)
    np.testing.assert_array_equal(apply_op(apply_op(img, "rotate90"), "rotate270"), img)
    for op in ("rotate90", "flip_h", "flip_v"):
        assert sorted(apply_op(img, op).ravel()) == sorted(img.ravel())
    assert apply_op(np.array([[250]], np.uint8), "brightness+10")[0, 0] == 255
    with pytest.raises(ContractViolation):
        augment(items, ("shear",))


def test_config_rejects_unknown_keys(tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"optimizer": {"populaton": 3}}))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    cfg = load_config(None)
    assert cfg["network"]["conv_filters"] == [52, 256, 156]
    assert cfg["optimizer"]["batch_size"] == 1024


def test_cli_segment_and_features(tmp_path, blob_dir):
    images = sorted(str(p) for p in (blob_dir / "yes").iterdir())[:2]
    out = tmp_path / "seg"
    assert main(["segment", *images, "--out", str(out)]) == 0
    report = json.loads((out / "segments.json").read_text())
    assert len(report) == 2 and all(0 <= r["threshold"] <= 254 for r in report)
    mask = read_gray(next(out.glob("*_mask.pgm")))
    assert set(np.unique(mask)) <= {0, 255}

    assert main(["features", *images, "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "features.csv")))
    assert rows and list(rows[0]) == ["image_id", "segment_label", "mean", "variance", "tumor_size"]


def test_cli_train_predict_evaluate(tmp_path, blob_dir, config_file):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["--config", str(config_file), "--seed", "4", "train",
                     "--data", str(blob_dir), "--out", str(out)]) == 0
        runs.append(out)
    a, b = runs
    assert (a / "model.bin").read_bytes() == (b / "model.bin").read_bytes()
    for name in ("curves.csv", "roc.csv", "split.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ra, rb = (json.loads((r / "report.json").read_text()) for r in runs)
    ra.pop("timing"), rb.pop("timing")
    assert ra == rb

    split = json.loads((a / "split.json").read_text())
    train_names = [n for n in split["train"] if n.startswith("yes/")][:2]
    images = [str(blob_dir / n) for n in train_names]
    assert main(["--config", str(config_file), "predict", "--model", str(a / "model.bin"),
                 *images, "--out", str(a)]) == 0
    preds = json.loads((a / "predictions.json").read_text())
    assert [p["label"] for p in preds] == ["yes", "yes"]

    assert main(["--config", str(config_file), "evaluate", "--model", str(a / "model.bin"),
                 "--data", str(blob_dir), "--out", str(a)]) == 0
    m = json.loads((a / "metrics.json").read_text())
    assert sum(m["confusion"].values()) == 24


def test_cli_evaluate_from_confusion_counts(tmp_path, capsys):
    cm = tmp_path / "cm.json"
    cm.write_text(json.dumps({"tp": 1075, "fp": 10, "fn": 51, "tn": 929}))
    assert main(["evaluate", "--confusion", str(cm), "--out", str(tmp_path)]) == 0
    assert "accuracy=0.97 precision=0.99 recall=0.95 f_measure=0.97" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, blob_dir):
    assert main(["predict", "--model", str(tmp_path / "none.bin"), "x.png", "--out", str(tmp_path)]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["--config", str(tmp_path / "bad.json"), "bench-opt", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    assert main(["segment", str(tmp_path / "missing.png"), "--out", str(tmp_path)]) == 2
    (tmp_path / "zero.json").write_text(json.dumps({"optimizer": {"population": 0}}))
    assert main(["--config", str(tmp_path / "zero.json"), "train", "--data", str(blob_dir),
                 "--out", str(tmp_path)]) == 3


def test_cli_augment(tmp_path, blob_dir):
    out = tmp_path / "aug"
    assert main(["augment", "--data", str(blob_dir), "--out", str(out)]) == 0
    assert len(list(out.rglob("*.png"))) == 24 * 8


def test_bench_opt_table(tmp_path):
    rows = bench_optimizers(["sphere"], dim=10, runs=3, population=30, iterations=200)
    assert [r["algorithm"] for r in rows] == ["HHO", "GWO", "G-HHO"]
    ghho = rows[2]
    assert ghho["median_best_fitness"] < 1e-2
    assert ghho["mean_seconds"] > 0 and ghho["peak_memory_mb"] > 0
    assert main(["bench-opt", "--functions", "sphere", "--runs", "1", "--iterations", "10",
                 "--out", str(tmp_path)]) == 0
    assert len(list(csv.DictReader(open(tmp_path / "bench.csv")))) == 3
