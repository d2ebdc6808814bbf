"""Grayscale preprocessing and Otsu-based tumour-candidate segmentation.

Images are 2-D ``uint8`` numpy arrays (rows x columns). Masks are boolean
arrays of the same shape wrapped in :class:`SegmentMask`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import ndimage

from ghho.errors import ContractViolation, DegenerateHistogram

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def as_gray(image) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ContractViolation(f"expected a 2-D grayscale image, got shape {arr.shape}")
    if arr.size == 0:
        raise ContractViolation("image has zero area")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ContractViolation("pixel intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


@dataclass(frozen=True)
class PreprocessOptions:
    median: bool = True
    normalize: bool = True
    equalize: bool = False


def median3(image: np.ndarray) -> np.ndarray:
    return ndimage.median_filter(image, size=3, mode="nearest")


def normalize(image: np.ndarray) -> np.ndarray:
    """Min-max stretch to [0, 255]; a constant image is returned unchanged."""
    lo, hi = int(image.min()), int(image.max())
    if lo == hi:
        return image.copy()
    scaled = (image.astype(np.float64) - lo) * (255.0 / (hi - lo))
    return np.rint(scaled).astype(np.uint8)


def equalize(image: np.ndarray) -> np.ndarray:
    counts = histogram(image)
    cdf = np.cumsum(counts)
    cdf_min = cdf[np.flatnonzero(counts)[0]]
    if cdf[-1] == cdf_min:
        return image.copy()
    lut = np.rint((cdf - cdf_min) * 255.0 / (cdf[-1] - cdf_min))
    return np.clip(lut, 0, 255).astype(np.uint8)[image]


def preprocess(image, options: PreprocessOptions = PreprocessOptions()) -> np.ndarray:
    out = as_gray(image)
    if options.median:
        out = median3(out)
    if options.normalize:
        out = normalize(out)
    if options.equalize:
        out = equalize(out)
    return out


def histogram(image) -> np.ndarray:
    return np.bincount(as_gray(image).ravel(), minlength=256).astype(np.int64)


def otsu_threshold(hist) -> int:
    """Threshold ``t`` in [0, 254] minimising the weighted within-class variance.

    Class 0 holds bins ``0..t`` and class 1 bins ``t+1..255``. The comparison
    is done in exact rational arithmetic so plateaus resolve to the smallest t.

    With ``S1``/``S2`` the first/second intensity moments and ``W`` the pixel
    count of a class, ``N * sigma_w^2 = S2_total - S1_0^2/W_0 - S1_1^2/W_1``;
    minimising it means maximising the subtracted part.
    """
    counts = [int(c) for c in np.asarray(hist).ravel()]
    if len(counts) != 256 or min(counts) < 0:
        raise ContractViolation("histogram must hold 256 non-negative counts")
    if sum(counts) == 0:
        raise ContractViolation("histogram is empty")
    if sum(1 for c in counts if c) < 2:
        raise DegenerateHistogram("a single occupied bin cannot be split")

    total_w = sum(counts)
    total_s1 = sum(i * c for i, c in enumerate(counts))
    w0 = s1_0 = 0
    best_t, best_score = 0, None
    for t in range(255):
        w0 += counts[t]
        s1_0 += t * counts[t]
        w1, s1_1 = total_w - w0, total_s1 - s1_0
        score = Fraction(0)
        if w0:
            score += Fraction(s1_0 * s1_0, w0)
        if w1:
            score += Fraction(s1_1 * s1_1, w1)
        if best_score is None or score > best_score:
            best_t, best_score = t, score
    return best_t


@dataclass
class SegmentMask:
    bits: np.ndarray
    threshold: Optional[int] = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise ContractViolation("mask must be 2-D")

    @property
    def shape(self):
        return self.bits.shape


def binarize(image, t: int) -> SegmentMask:
    return SegmentMask(as_gray(image) > t, int(t))


def fill_holes(mask: SegmentMask) -> SegmentMask:
    """Set background regions that are not 4-connected to the border."""
    filled = ndimage.binary_fill_holes(mask.bits, structure=FOUR_CONNECTED)
    return SegmentMask(filled, mask.threshold)


@dataclass(frozen=True)
class Segment:
    label: int
    rows: np.ndarray
    cols: np.ndarray
    bbox: tuple[int, int, int, int]  # (row0, col0, row1, col1), end-exclusive

    @property
    def size(self) -> int:
        return self.rows.size

    @property
    def height(self) -> int:
        return self.bbox[2] - self.bbox[0]

    @property
    def width(self) -> int:
        return self.bbox[3] - self.bbox[1]


def extract_segments(mask: SegmentMask) -> list[Segment]:
    """8-connected components, labelled 1.. in raster-scan discovery order."""
    labels, count = ndimage.label(mask.bits, structure=EIGHT_CONNECTED)
    if count == 0:
        return []
    # ndimage.label already numbers components by first raster occurrence
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(1, count + 2))
    ncols = labels.shape[1]
    segments = []
    for k in range(count):
        idx = order[bounds[k]:bounds[k + 1]]
        rows, cols = np.divmod(idx, ncols)
        bbox = (int(rows.min()), int(cols.min()), int(rows.max()) + 1, int(cols.max()) + 1)
        segments.append(Segment(k + 1, rows, cols, bbox))
    return segments


def apply_mask(image, mask: SegmentMask) -> np.ndarray:
    image = as_gray(image)
    if image.shape != mask.shape:
        raise ContractViolation(f"image {image.shape} and mask {mask.shape} differ in shape")
    return np.where(mask.bits, image, 0).astype(np.uint8)


def segment(image, options: PreprocessOptions = PreprocessOptions(), use_otsu: bool = True,
            threshold: Optional[int] = None) -> tuple[np.ndarray, SegmentMask]:
    """Preprocess, threshold, fill holes. Returns the preprocessed image and
    the filled mask; an image with a single gray level yields an empty mask."""
    pre = preprocess(image, options)
    if use_otsu:
        try:
            t = otsu_threshold(histogram(pre))
        except DegenerateHistogram:
            return pre, SegmentMask(np.zeros(pre.shape, dtype=bool), None)
    else:
        if threshold is None:
            raise ContractViolation("a fixed threshold is required when Otsu is disabled")
        t = threshold
    return pre, fill_holes(binarize(pre, t))
