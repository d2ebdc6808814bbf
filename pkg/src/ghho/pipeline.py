"""Image -> (masked image, feature vector) preparation shared by training and prediction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ghho.features import FeatureVector, dominant_features
from ghho.segmentation import PreprocessOptions, SegmentMask, apply_mask, as_gray, segment


@dataclass(frozen=True)
class PipelineOptions:
    preprocess: PreprocessOptions = field(default_factory=PreprocessOptions)
    use_otsu: bool = True
    threshold: Optional[int] = None
    squared_variance: bool = False


@dataclass(frozen=True)
class Prepared:
    masked: np.ndarray
    mask: SegmentMask
    features: FeatureVector


def prepare(image, options: PipelineOptions = PipelineOptions()) -> Prepared:
    image = as_gray(image)
    pre, mask = segment(image, options.preprocess, options.use_otsu, options.threshold)
    masked = apply_mask(pre, mask)
    return Prepared(masked, mask, dominant_features(pre, mask, options.squared_variance))


def network_input(masked: np.ndarray) -> np.ndarray:
    """Scale a masked uint8 image to a (1, H, W) float tensor in [0, 1]."""
    return (np.asarray(masked, dtype=np.float64) / 255.0)[None]
