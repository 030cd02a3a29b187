"""Synthetic chest phantoms with exact ground-truth region masks.

The lung phantom carries fine bright structures inside the lungs
(vessel-like segments) and rib-like arcs in the chest wall, so mask
extraction, noise injection, and texture metrics all have something
non-trivial to verify against.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .core import Image, NoiseModel, RegionLabel, RegionMask, ValidationError
from .tomography import ProjectionGeometry, simulate_uldct

# Classic head phantom: (intensity, a, b, x0, y0, phi_degrees) per ellipse,
# intensities additive, total staying within [0, 1].
_SHEPP_LOGAN = [
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
]


def _unit_grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    ax = (np.arange(size) - (size - 1) / 2.0) / ((size - 1) / 2.0)
    return np.meshgrid(ax, ax)


def _ellipse_mask(xg, yg, a, b, x0, y0, phi_deg=0.0) -> np.ndarray:
    phi = math.radians(phi_deg)
    x = xg - x0
    y = yg - y0
    xr = x * math.cos(phi) + y * math.sin(phi)
    yr = -x * math.sin(phi) + y * math.cos(phi)
    return (xr / a) ** 2 + (yr / b) ** 2 <= 1.0


def shepp_logan(size: int) -> Image:
    """Standard head phantom on [0, 1] intensities."""
    if size < 16:
        raise ValidationError("shepp-logan phantom needs size >= 16")
    xg, yg = _unit_grid(size)
    img = np.zeros((size, size), dtype=np.float64)
    for amp, a, b, x0, y0, phi in _SHEPP_LOGAN:
        img[_ellipse_mask(xg, yg, a, b, x0, y0, phi)] += amp
    return Image(data=np.clip(img, 0.0, 1.0), meta={"phantom": "shepp-logan"})


def shepp_logan_body_mask(size: int) -> RegionMask:
    """All pixels inside the outer skull ellipse labeled body."""
    xg, yg = _unit_grid(size)
    amp, a, b, x0, y0, phi = _SHEPP_LOGAN[0]
    body = _ellipse_mask(xg, yg, a, b, x0, y0, phi)
    return RegionMask(labels=body.astype(np.uint8) * np.uint8(RegionLabel.BODY))


# Lung phantom intensities.
_BODY_VAL = 0.5
_LUNG_VAL = 0.05
_VESSEL_VAL = 0.7
_RIB_VAL = 0.9

# Geometry in unit-square coordinates (fractions of the half-size).
_BODY_AX = (0.84, 0.70)
_LUNG_AX = (0.26, 0.42)
_LUNG_CX = 0.38
_LUNG_CY = -0.02
_VESSEL_ANGLES = (-55.0, 10.0, 70.0)
_VESSEL_LEN = 0.26
_RIB_BAND = (0.88, 0.95)
_RIB_SECTORS = ((15, 40), (60, 85), (105, 130), (150, 175),
                (195, 220), (240, 265), (285, 310), (330, 355))


def _draw_segment(canvas: np.ndarray, inside: np.ndarray, size: int,
                  x0: float, y0: float, angle_deg: float, length: float,
                  value: float):
    # 1-px-wide polyline, clipped to `inside` so lungs stay 4-connected
    phi = math.radians(angle_deg)
    steps = max(2, int(length * size))
    ts = np.linspace(0.0, length, steps)
    xs = x0 + ts * math.cos(phi)
    ys = y0 + ts * math.sin(phi)
    cols = np.round((xs + 1.0) * (size - 1) / 2.0).astype(int)
    rows = np.round((ys + 1.0) * (size - 1) / 2.0).astype(int)
    ok = (cols >= 0) & (cols < size) & (rows >= 0) & (rows < size)
    ok &= inside[np.clip(rows, 0, size - 1), np.clip(cols, 0, size - 1)]
    canvas[rows[ok], cols[ok]] = value


def lung_phantom(size: int) -> tuple[Image, RegionMask]:
    """Chest slice phantom plus its exact ground-truth region mask.

    Body ellipse 0.5, two dark lungs 0.05 holding bright vessel segments
    0.7, and rib arcs 0.9 near the body boundary.  The mask labels vessel
    pixels as body: lung means dark parenchyma only.
    """
    if size < 64:
        raise ValidationError("lung phantom needs size >= 64")
    xg, yg = _unit_grid(size)
    img = np.zeros((size, size), dtype=np.float64)
    labels = np.full((size, size), int(RegionLabel.BACKGROUND), dtype=np.uint8)

    body = _ellipse_mask(xg, yg, *_BODY_AX, 0.0, 0.0)
    img[body] = _BODY_VAL
    labels[body] = int(RegionLabel.BODY)

    rr = (xg / _BODY_AX[0]) ** 2 + (yg / _BODY_AX[1]) ** 2
    band = (rr >= _RIB_BAND[0] ** 2) & (rr <= _RIB_BAND[1] ** 2)
    theta = np.degrees(np.arctan2(yg, xg)) % 360.0
    for lo, hi in _RIB_SECTORS:
        img[band & (theta >= lo) & (theta <= hi)] = _RIB_VAL

    for side in (-1.0, 1.0):
        cx = side * _LUNG_CX
        lung = _ellipse_mask(xg, yg, *_LUNG_AX, cx, _LUNG_CY)
        img[lung] = _LUNG_VAL
        labels[lung] = int(RegionLabel.LUNG)

        # vessels radiate from the hilum; endpoints stay well inside the
        # lung so the surrounding parenchyma stays one 4-connected piece
        core = _ellipse_mask(xg, yg, 0.82 * _LUNG_AX[0], 0.82 * _LUNG_AX[1],
                             cx, _LUNG_CY)
        hx = cx - side * 0.4 * _LUNG_AX[0]
        helper = np.zeros((size, size), dtype=np.float64)
        for ang in _VESSEL_ANGLES:
            _draw_segment(helper, core, size, hx, _LUNG_CY,
                          ang if side > 0 else 180.0 - ang, _VESSEL_LEN, 1.0)
        vessels = helper > 0.0
        img[vessels] = _VESSEL_VAL
        labels[vessels] = int(RegionLabel.BODY)

    # rasterized vessel arms can pinch off parenchyma slivers at small
    # sizes; absorb anything beyond the two main lungs into the vessels
    conn4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    comp, n = ndimage.label(labels == int(RegionLabel.LUNG), structure=conn4)
    if n > 2:
        areas = np.bincount(comp.ravel())
        keep = set(np.argsort(areas[1:])[-2:] + 1)
        sliver = (comp > 0) & ~np.isin(comp, sorted(keep))
        img[sliver] = _VESSEL_VAL
        labels[sliver] = int(RegionLabel.BODY)

    return (Image(data=img, meta={"phantom": "lung"}),
            RegionMask(labels=labels))


def lung_phantom_pair(size: int, model: NoiseModel,
                      geom: ProjectionGeometry | None = None,
                      ) -> tuple[Image, Image, RegionMask]:
    """(uldct, ndct, ground-truth mask): the noisy companion is simulated."""
    ndct, mask = lung_phantom(size)
    uldct = simulate_uldct(ndct, model, geom)
    return uldct, ndct, mask
