"""Segment a synthetic scan: preprocessing, Otsu threshold, hole filling, features.

Run: python3 demos/otsu_segmentation.py
"""

import numpy as np

from ghho.data import synthetic_blobs
from ghho.features import dominant_features, extract_features
from ghho.segmentation import extract_segments, histogram, otsu_threshold, preprocess, segment

# one positive (bright blob) image from the synthetic generator
image = next(item.image for item in synthetic_blobs(4, seed=5) if item.label == 1)
print("image", image.shape, image.dtype, "gray range", image.min(), "-", image.max())

# median filter and min-max stretch, then the threshold that minimises within-class variance
pre = preprocess(image)
t = otsu_threshold(histogram(pre))
print("Otsu threshold", t)

# segment() runs the same steps and also fills enclosed holes
pre, mask = segment(image)
print("foreground pixels", int(mask.bits.sum()), "of", mask.bits.size)

segments = extract_segments(mask)
for seg in segments[:5]:
    print(f"  segment {seg.label}: {seg.size} px, box {seg.height}x{seg.width}")

# mean, mean absolute deviation and ellipse-area tumour size per segment
for seg, fv in zip(segments[:5], extract_features(pre, mask)):
    print(f"  segment {seg.label}: mean {fv.mean:.1f} variance {fv.variance:.1f} size {fv.tumor_size:.0f}")

# the classifier sees the largest segment only
print("classifier features", np.round(dominant_features(pre, mask).as_array(), 2))
