"""Three-way region labeling: background / body / lung.

The body outline comes from Otsu thresholding; corner-seeded flood fill
separates true background from interior holes; holes large enough to be
anatomical become the lung region.  Per-image masks from both images of
a pair are merged into a common mask with body taking precedence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import Image, RegionLabel, RegionMask, ValidationError

# 4-connectivity everywhere: diagonal single-pixel gaps must not leak.
_CONN4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class OtsuResult:
    threshold: float
    between_class_variance: float
    histogram_bins: int


@dataclass(frozen=True)
class SegmentationParams:
    bins: int = 256
    min_lung_area: int = 50


def otsu_threshold(img: Image, bins: int = 256) -> OtsuResult:
    """Histogram threshold maximizing between-class variance.

    The histogram spans [0, 1] in `bins` equal bins; candidate thresholds
    are the interior bin edges k/bins for k in 1..bins-1, and ties break
    toward the lower edge.
    """
    if bins < 2:
        raise ValidationError("otsu needs at least 2 histogram bins")
    data = img.data
    if data.min() == data.max():
        raise ValidationError("constant image has no valid threshold")

    hist, _ = np.histogram(data, bins=bins, range=(0.0, 1.0))
    counts = hist.astype(np.float64)
    total = counts.sum()
    mids = (np.arange(bins) + 0.5) / bins
    cum_n = np.cumsum(counts)
    cum_m = np.cumsum(counts * mids)

    # split k: class 0 = bins [0, k), class 1 = bins [k, bins)
    w0 = cum_n[:-1]
    w1 = total - w0
    valid = (w0 > 0) & (w1 > 0)
    bcv = np.zeros(bins - 1)
    mu0 = np.divide(cum_m[:-1], w0, out=np.zeros(bins - 1), where=valid)
    mu1 = np.divide(cum_m[-1] - cum_m[:-1], w1, out=np.zeros(bins - 1), where=valid)
    bcv[valid] = (w0 * w1)[valid] * (mu0 - mu1)[valid] ** 2 / total**2

    k = int(np.argmax(bcv)) + 1   # argmax returns the first (lowest) maximum
    return OtsuResult(threshold=k / bins,
                      between_class_variance=float(bcv[k - 1]),
                      histogram_bins=bins)


def binarize(img: Image, threshold: float) -> np.ndarray:
    """Pixel >= threshold -> 1, else 0."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError("threshold must lie in [0, 1]")
    return (img.data >= threshold).astype(np.uint8)


def flood_fill_background(mask: np.ndarray) -> np.ndarray:
    """Fill interior holes, keeping only corner-connected zeros as background.

    Returns a binary mask where 0 marks exactly the 4-connected components
    of zero pixels that touch one of the four image corners; every other
    pixel (original foreground and enclosed holes) is 1.
    """
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValidationError("flood fill expects a 2-D binary mask")
    zeros = m == 0
    labels, _ = ndimage.label(zeros, structure=_CONN4)
    corners = {labels[0, 0], labels[0, -1], labels[-1, 0], labels[-1, -1]}
    corners.discard(0)
    background = np.isin(labels, sorted(corners)) if corners else np.zeros_like(zeros)
    return np.where(background, 0, 1).astype(np.uint8)


def lung_region(body_with_holes: np.ndarray, filled_body: np.ndarray,
                min_area: int = 50) -> np.ndarray:
    """Interior holes of the body mask, with small specks discarded."""
    raw = np.asarray(body_with_holes)
    filled = np.asarray(filled_body)
    if raw.shape != filled.shape:
        raise ValidationError(
            f"mask shapes differ: {raw.shape} vs {filled.shape}")
    if np.any((filled == 0) & (raw != 0)):
        raise ValidationError("filled_body must contain body_with_holes")

    holes = (filled != 0) & (raw == 0)
    labels, n = ndimage.label(holes, structure=_CONN4)
    if n == 0:
        return np.zeros(raw.shape, dtype=np.uint8)
    areas = np.bincount(labels.ravel())
    keep = np.flatnonzero(areas >= min_area)
    keep = keep[keep != 0]
    return np.isin(labels, keep).astype(np.uint8)


def segment(img: Image, params: SegmentationParams = SegmentationParams()) -> RegionMask:
    """Full per-image labeling: otsu -> binarize -> flood fill -> holes."""
    otsu = otsu_threshold(img, bins=params.bins)
    raw = binarize(img, otsu.threshold)
    filled = flood_fill_background(raw)
    lung = lung_region(raw, filled, min_area=params.min_lung_area)

    labels = np.full(img.shape, int(RegionLabel.BODY), dtype=np.uint8)
    labels[filled == 0] = int(RegionLabel.BACKGROUND)
    labels[lung != 0] = int(RegionLabel.LUNG)
    return RegionMask(labels=labels)


# Fusion priority: body wins over lung wins over background.
_PRIORITY_OF_CODE = np.array([0, 2, 1], dtype=np.uint8)
_CODE_OF_PRIORITY = np.array([0, 2, 1], dtype=np.uint8)


def common_mask(uldct_mask: RegionMask, ndct_mask: RegionMask) -> RegionMask:
    """Per-pixel merge of two masks; background only where both agree."""
    if uldct_mask.shape != ndct_mask.shape:
        raise ValidationError(
            f"mask shapes differ: {uldct_mask.shape} vs {ndct_mask.shape}")
    pa = _PRIORITY_OF_CODE[uldct_mask.labels]
    pb = _PRIORITY_OF_CODE[ndct_mask.labels]
    return RegionMask(labels=_CODE_OF_PRIORITY[np.maximum(pa, pb)])
