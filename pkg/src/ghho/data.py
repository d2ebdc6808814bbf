"""Image I/O, dataset ingestion, augmentation and a synthetic blob dataset."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from ghho.errors import ContractViolation, DataError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".pgm"}
INPUT_SIZE = 143
LABELS = {"yes": 1, "no": 0}


def read_gray(path) -> np.ndarray:
    """Decode PNG / JPEG / PGM to 8-bit grayscale (ITU-R 601 luminance)."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc


def write_pgm(path, image: np.ndarray) -> None:
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(image.tobytes())


def write_mask_pgm(path, bits: np.ndarray) -> None:
    write_pgm(path, np.where(bits, 255, 0).astype(np.uint8))


def fit_square(image: np.ndarray, size: int = INPUT_SIZE) -> np.ndarray:
    """Zero-pad to a centred square, then resize to ``size`` x ``size``."""
    h, w = image.shape
    side = max(h, w)
    canvas = np.zeros((side, side), dtype=np.uint8)
    top, left = (side - h) // 2, (side - w) // 2
    canvas[top:top + h, left:left + w] = image
    if side == size:
        return canvas
    resized = Image.fromarray(canvas).resize((size, size), Image.BILINEAR)
    return np.asarray(resized, dtype=np.uint8).copy()


@dataclass(frozen=True)
class LabeledImage:
    name: str
    image: np.ndarray
    label: int


def _label_value(text: str) -> int:
    key = text.strip().lower()
    if key in LABELS:
        return LABELS[key]
    if key in ("0", "1"):
        return int(key)
    raise DataError(f"unknown label {text!r}")


def ingest(dir_path, labels_file=None, size: int = INPUT_SIZE) -> list[LabeledImage]:
    """Load a labelled image directory.

    Labels come from ``labels_file`` (CSV rows ``filename,label`` with label
    yes/no or 1/0) or, without one, from ``yes/`` and ``no/`` subfolders.
    Unreadable files are skipped with a warning.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    entries: list[tuple[Path, int]] = []
    if labels_file is not None:
        with open(labels_file, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() in ("filename", "file", "name"):
                    continue
                entries.append((root / row[0].strip(), _label_value(row[1])))
    else:
        for folder, label in LABELS.items():
            sub = root / folder
            if sub.is_dir():
                entries += [(p, label) for p in sorted(sub.iterdir())
                            if p.suffix.lower() in IMAGE_SUFFIXES]

    items, skipped = [], 0
    for path, label in entries:
        try:
            image = read_gray(path)
        except DataError as exc:
            log.warning("skipping %s", exc)
            skipped += 1
            continue
        name = str(path.relative_to(root))
        items.append(LabeledImage(name, fit_square(image, size), label))
    if skipped:
        log.warning("skipped %d unreadable file(s) out of %d", skipped, len(entries))
    if not items:
        raise DataError(f"no readable images found under {root}")
    return items


AUGMENT_OPS = ("rotate90", "rotate180", "rotate270", "flip_h", "flip_v")
DEFAULT_RECIPE = ("rotate90", "rotate180", "rotate270", "flip_h", "flip_v",
                  "brightness+10", "brightness-10")


def apply_op(image: np.ndarray, op: str) -> np.ndarray:
    if op == "rotate90":
        return np.rot90(image, 1).copy()
    if op == "rotate180":
        return np.rot90(image, 2).copy()
    if op == "rotate270":
        return np.rot90(image, 3).copy()
    if op == "flip_h":
        return image[:, ::-1].copy()
    if op == "flip_v":
        return image[::-1, :].copy()
    if op.startswith("brightness"):
        try:
            delta = int(op[len("brightness"):])
        except ValueError:
            raise ContractViolation(f"bad brightness op {op!r}") from None
        return np.clip(image.astype(np.int16) + delta, 0, 255).astype(np.uint8)
    raise ContractViolation(f"unknown augmentation op {op!r}")


def augment(items: Sequence[LabeledImage], recipe: Sequence[str] = DEFAULT_RECIPE,
            include_original: bool = True) -> list[LabeledImage]:
    """Expand each item into ``len(recipe) + include_original`` label-preserving copies."""
    for op in recipe:
        apply_op(np.zeros((1, 1), dtype=np.uint8), op)
    out = []
    for item in items:
        if include_original:
            out.append(item)
        for op in recipe:
            out.append(replace(item, name=f"{item.name}#{op}", image=apply_op(item.image, op)))
    return out


def synthetic_blobs(n: int = 200, size: int = INPUT_SIZE, seed: int = 0,
                    background: float = 40.0, noise: float = 12.0,
                    blob_level: float = 210.0) -> list[LabeledImage]:
    """Noisy dark images, half of them (label 1) carrying a bright elliptical blob."""
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size]
    items = []
    for k in range(n):
        label = k % 2
        img = rng.normal(background, noise, (size, size))
        if label:
            scale = size / INPUT_SIZE
            ry, rx = rng.uniform(8 * scale, 22 * scale, size=2)
            margin = 25 * scale
            cy, cx = rng.uniform(margin, size - margin, size=2)
            inside = ((rows - cy) / ry) ** 2 + ((cols - cx) / rx) ** 2 <= 1.0
            img[inside] = rng.normal(blob_level, noise, inside.sum())
        items.append(LabeledImage(f"synthetic_{k:04d}", np.clip(np.rint(img), 0, 255).astype(np.uint8), label))
    order = rng.permutation(n)
    return [items[i] for i in order]
