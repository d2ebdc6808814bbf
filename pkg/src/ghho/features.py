"""Per-segment statistics: mean intensity, spread, and elliptical size."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from typing import Iterable, Sequence

import numpy as np

from ghho.errors import ContractViolation
from ghho.segmentation import Segment, SegmentMask, as_gray, extract_segments

FEATURE_NAMES = ("mean", "variance", "tumor_size")


@dataclass(frozen=True)
class FeatureVector:
    mean: float
    variance: float
    tumor_size: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


ZERO_FEATURES = FeatureVector(0.0, 0.0, 0.0)


def _pixels(pixels) -> np.ndarray:
    arr = np.asarray(pixels, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ContractViolation("segment has no pixels")
    return arr


def segment_mean(pixels) -> float:
    arr = _pixels(pixels)
    return float(arr.sum() / arr.size)


def segment_variance(pixels, mean: float, squared: bool = False) -> float:
    """Mean absolute deviation from ``mean``.

    ``squared=True`` gives the ordinary (population) variance instead.
    """
    dev = _pixels(pixels) - mean
    if squared:
        return float(np.mean(dev * dev))
    return float(np.mean(np.abs(dev)))


def tumor_size(length: float, width: float) -> float:
    """Area of the ellipse inscribed in a ``length`` x ``width`` box."""
    if length < 0 or width < 0:
        raise ContractViolation("box sides must be non-negative")
    return math.pi / 4.0 * length * width


def build_feature_vector(seg: Segment, image, squared_variance: bool = False) -> FeatureVector:
    image = as_gray(image)
    if seg.size == 0:
        raise ContractViolation("segment has no pixels")
    values = image[seg.rows, seg.cols]
    mu = segment_mean(values)
    return FeatureVector(
        mean=mu,
        variance=segment_variance(values, mu, squared=squared_variance),
        tumor_size=tumor_size(seg.height, seg.width),
    )


def extract_features(image, mask: SegmentMask, squared_variance: bool = False) -> list[FeatureVector]:
    """One feature vector per segment, in segment-label order."""
    return [build_feature_vector(s, image, squared_variance) for s in extract_segments(mask)]


def dominant_features(image, mask: SegmentMask, squared_variance: bool = False) -> FeatureVector:
    """Features of the largest segment (lowest label on ties); zeros when the mask is empty.

    This is the single per-image vector handed to the classifier.
    """
    segments = extract_segments(mask)
    if not segments:
        return ZERO_FEATURES
    largest = max(segments, key=lambda s: (s.size, -s.label))
    return build_feature_vector(largest, image, squared_variance)


def write_features_csv(rows: Iterable[tuple[str, int, FeatureVector]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "segment_label", *FEATURE_NAMES])
        for image_id, label, fv in rows:
            writer.writerow([image_id, label, repr(fv.mean), repr(fv.variance), repr(fv.tumor_size)])


class FeatureScaler:
    """Min-max scaling of feature vectors fitted on a reference set."""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)

    @classmethod
    def fit(cls, vectors: Sequence[FeatureVector]) -> "FeatureScaler":
        if not vectors:
            return cls(np.zeros(3), np.ones(3))
        data = np.stack([v.as_array() for v in vectors])
        return cls(data.min(axis=0), data.max(axis=0))

    def transform(self, fv: FeatureVector) -> np.ndarray:
        span = self.upper - self.lower
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (fv.as_array() - self.lower) / safe, 0.0)
