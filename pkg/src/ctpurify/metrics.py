"""Region-wise QC statistics and 1-D intensity-distribution distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Image, RegionLabel, RegionMask, ValidationError


@dataclass(frozen=True)
class RegionStats:
    region: RegionLabel
    pixel_count: int
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class HistDistance:
    bins: int
    distance: float


def region_values(img: Image, mask: RegionMask, label: RegionLabel) -> np.ndarray:
    if img.shape != mask.shape:
        raise ValidationError(f"shape mismatch: {img.shape} vs {mask.shape}")
    return img.data[mask.region(label)]


def region_stats(img: Image, mask: RegionMask) -> list[RegionStats]:
    """Exact per-region moments; empty regions are omitted."""
    if img.shape != mask.shape:
        raise ValidationError(f"shape mismatch: {img.shape} vs {mask.shape}")
    out = []
    for label in RegionLabel:
        vals = img.data[mask.region(label)].astype(np.float64)
        if vals.size == 0:
            continue
        out.append(RegionStats(
            region=label,
            pixel_count=int(vals.size),
            mean=float(vals.mean()),
            std=float(vals.std()),
            min=float(vals.min()),
            max=float(vals.max()),
        ))
    return out


def wasserstein_1d(a: np.ndarray, b: np.ndarray, bins: int = 128) -> HistDistance:
    """Exact 1-D Wasserstein distance between grid-quantized histograms.

    Values are snapped to a uniform grid of `bins` points spanning [0, 1];
    the distance is the integral of |CDF_a - CDF_b| over the grid, i.e.
    the mean absolute CDF gap across the bins-1 grid intervals.  A point
    mass at 0 versus one at 1 gives exactly 1.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValidationError("wasserstein_1d needs non-empty regions")
    if bins < 2:
        raise ValidationError("wasserstein_1d needs at least 2 bins")

    def cdf(v):
        idx = np.clip(np.round(v * (bins - 1)).astype(np.int64), 0, bins - 1)
        hist = np.bincount(idx, minlength=bins) / v.size
        return np.cumsum(hist)

    gap = np.abs(cdf(a) - cdf(b))[:-1]
    return HistDistance(bins=bins, distance=float(gap.sum() / (bins - 1)))


def rmse(a: Image, b: Image, mask: RegionMask | None = None,
         region: RegionLabel | None = None) -> float:
    """Root-mean-square error, optionally restricted to one mask region."""
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    if region is not None:
        if mask is None:
            raise ValidationError("region selection requires a mask")
        if mask.shape != a.shape:
            raise ValidationError(f"shape mismatch: {a.shape} vs {mask.shape}")
        diff = diff[mask.region(region)]
        if diff.size == 0:
            raise ValidationError(f"region {region.name} is empty")
    return float(np.sqrt(np.mean(diff**2)))
