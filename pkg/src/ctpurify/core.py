"""Domain types and bit-exact file I/O.

Pixel data lives in normalized [0, 1] intensity units throughout the
pipeline; the raw intensity range of a source file is kept in the image
meta so the normalization is reversible.  The canonical lossless format
is raw little-endian float32 plus a JSON sidecar; 16-bit grayscale PNG
is supported for interchange.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

MANIFEST_FORMAT_VERSION = 1

# Serialization codes are a stable format contract.
class RegionLabel(IntEnum):
    BACKGROUND = 0
    BODY = 1
    LUNG = 2


class CTPurifyError(Exception):
    """Base class for all toolkit errors."""


class FormatError(CTPurifyError):
    """Unsupported or malformed file content."""


class ValidationError(CTPurifyError):
    """Inputs violate an operation's contract (dimensions, ranges, ...)."""


class ManifestError(CTPurifyError):
    """Pair manifest is malformed or references missing files."""


@dataclass(frozen=True)
class Image:
    """2-D scalar grid, row-major, values in [0, 1]."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"image data must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError("image values outside [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class RegionMask:
    """Per-pixel background / body / lung labeling, same grid as its image."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValidationError(f"mask labels must be 2-D, got shape {arr.shape}")
        if arr.max(initial=0) > max(RegionLabel):
            raise ValidationError("mask contains label codes outside {0, 1, 2}")
        object.__setattr__(self, "labels", arr)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def region(self, label: RegionLabel) -> np.ndarray:
        return self.labels == int(label)


@dataclass(frozen=True)
class Sinogram:
    """Radon-domain projections: one row of detector bins per angle."""

    data: np.ndarray           # shape (num_angles, num_bins)
    angles: np.ndarray         # radians, strictly increasing in [0, pi)
    bin_spacing: float = 1.0   # detector pitch in pixel units

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        ang = np.asarray(self.angles, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"sinogram data must be 2-D, got shape {arr.shape}")
        if ang.ndim != 1 or ang.shape[0] != arr.shape[0]:
            raise ValidationError("angle count does not match sinogram rows")
        if ang.size and (ang[0] < 0.0 or ang[-1] >= np.pi or np.any(np.diff(ang) <= 0)):
            raise ValidationError("angles must be strictly increasing in [0, pi)")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("sinogram contains non-finite values")
        if self.bin_spacing <= 0.0:
            raise ValidationError("bin_spacing must be positive")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "angles", ang)

    @property
    def num_angles(self) -> int:
        return self.data.shape[0]

    @property
    def num_bins(self) -> int:
        return self.data.shape[1]

    @property
    def detector_extent(self) -> float:
        """Detector length in pixel units."""
        return self.num_bins * self.bin_spacing


@dataclass(frozen=True)
class NoiseModel:
    """Dose-calibrated sinogram-noise parameters.

    dose_fraction scales the expected photon count, so noise variance in
    the log-domain line integrals grows as 1/dose_fraction.  mu_scale
    maps line integrals normalized to the detector extent onto a
    physically plausible attenuation range.
    """

    dose_fraction: float = 0.02
    incident_photons_n0: float = 1e6
    electronic_sigma: float = 0.0
    mu_scale: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.dose_fraction <= 1.0:
            raise ValidationError("dose_fraction must be in (0, 1]")
        if self.incident_photons_n0 <= 0.0:
            raise ValidationError("incident_photons_n0 must be positive")
        if self.electronic_sigma < 0.0:
            raise ValidationError("electronic_sigma must be non-negative")
        if self.mu_scale <= 0.0:
            raise ValidationError("mu_scale must be positive")


@dataclass(frozen=True)
class PairEntry:
    pair_id: str
    uldct_path: str
    ndct_path: str
    split: str = "train"

    def __post_init__(self):
        if self.split not in ("train", "val", "test"):
            raise ManifestError(f"pair {self.pair_id!r}: invalid split {self.split!r}")


@dataclass(frozen=True)
class PairManifest:
    entries: tuple[PairEntry, ...]
    format_version: int = MANIFEST_FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.pair_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ManifestError(f"duplicate pair ids: {dupes}")

    def split_entries(self, split: str) -> list[PairEntry]:
        return [e for e in self.entries if e.split == split]


# ---------------------------------------------------------------------------
# Sidecar helpers

def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed sidecar {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Image I/O

U16_MAX = 65535


def save_image(img: Image, path, overwrite: bool = True):
    """Write an image as raw .f32 (lossless) or 16-bit grayscale .png.

    A JSON sidecar carrying {width, height, intensity_min, intensity_max,
    meta} is written next to either format.
    """
    path = Path(path)
    if path.exists() and not overwrite:
        raise FormatError(f"refusing to overwrite existing file {path}")
    if not path.parent.is_dir():
        raise FormatError(f"parent directory does not exist: {path.parent}")

    if path.suffix == ".f32":
        path.write_bytes(img.data.astype("<f4").tobytes())
    elif path.suffix == ".png":
        q = np.round(img.data.astype(np.float64) * U16_MAX).astype(np.uint16)
        PILImage.fromarray(q).save(path)
    else:
        raise FormatError(f"unsupported image format {path.suffix!r}")

    _write_json(_sidecar_path(path), {
        "kind": "image",
        "width": img.width,
        "height": img.height,
        "intensity_min": float(img.meta.get("intensity_min", 0.0)),
        "intensity_max": float(img.meta.get("intensity_max", 1.0)),
        "meta": {k: str(v) for k, v in img.meta.items()},
    })


def load_image(path, normalize: str = "auto") -> Image:
    """Load an image and map values to [0, 1].

    normalize="auto" keeps .f32 values as-is (clamped) and maps 16-bit
    grayscale over its full dtype range [0, 65535].  Meta records the
    source path and raw intensity range.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    if normalize != "auto":
        raise ValidationError(f"unknown normalization policy {normalize!r}")

    sidecar = _sidecar_path(path)
    meta: dict = {}
    side = None
    if sidecar.exists():
        side = _read_json(sidecar)
        meta.update(side.get("meta", {}))

    if path.suffix == ".f32":
        if side is None:
            raise FormatError(f"missing sidecar for raw image {path}")
        w, h = int(side["width"]), int(side["height"])
        raw = np.frombuffer(path.read_bytes(), dtype="<f4")
        if raw.size != w * h:
            raise FormatError(
                f"{path}: {raw.size} values but sidecar declares {w}x{h}")
        data = raw.reshape(h, w).astype(np.float64)
        lo, hi = float(np.min(data)), float(np.max(data))
        data = np.clip(data, 0.0, 1.0)
    elif path.suffix == ".png":
        pil = PILImage.open(path)
        arr = np.asarray(pil)
        if arr.ndim != 2:
            raise FormatError(f"{path}: expected single-channel grayscale")
        if arr.dtype == np.uint8:
            scale = 255.0
        elif arr.dtype in (np.uint16, np.int32):
            scale = float(U16_MAX)
        else:
            raise FormatError(f"{path}: unsupported pixel type {arr.dtype}")
        lo, hi = float(arr.min()), float(arr.max())
        data = arr.astype(np.float64) / scale
        if side is not None:
            sw, sh = int(side["width"]), int(side["height"])
            if (sh, sw) != data.shape:
                raise FormatError(
                    f"{path}: sidecar declares {sw}x{sh}, file is "
                    f"{data.shape[1]}x{data.shape[0]}")
    else:
        raise FormatError(f"unsupported image format {path.suffix!r}")

    meta.setdefault("raw_min", str(lo))
    meta.setdefault("raw_max", str(hi))
    meta["source_path"] = str(path)
    return Image(data=data, meta=meta)


# ---------------------------------------------------------------------------
# RegionMask I/O: raw 8-bit label codes plus sidecar.

def save_mask(mask: RegionMask, path, overwrite: bool = True):
    path = Path(path)
    if path.exists() and not overwrite:
        raise FormatError(f"refusing to overwrite existing file {path}")
    if path.suffix != ".u8":
        raise FormatError(f"unsupported mask format {path.suffix!r}")
    path.write_bytes(mask.labels.astype(np.uint8).tobytes())
    _write_json(_sidecar_path(path), {
        "kind": "region_mask",
        "width": mask.width,
        "height": mask.height,
        "labels": {str(int(l)): l.name.lower() for l in RegionLabel},
    })


def load_mask(path) -> RegionMask:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such mask file: {path}")
    side = _read_json(_sidecar_path(path))
    w, h = int(side["width"]), int(side["height"])
    raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    if raw.size != w * h:
        raise FormatError(f"{path}: {raw.size} labels but sidecar declares {w}x{h}")
    return RegionMask(labels=raw.reshape(h, w).copy())


# ---------------------------------------------------------------------------
# Sinogram I/O: raw float32 plus geometry sidecar (uniform angle grids only).

def save_sinogram(sino: Sinogram, path, overwrite: bool = True):
    path = Path(path)
    if path.exists() and not overwrite:
        raise FormatError(f"refusing to overwrite existing file {path}")
    if path.suffix != ".f32":
        raise FormatError(f"unsupported sinogram format {path.suffix!r}")
    uniform = np.linspace(0.0, np.pi, sino.num_angles, endpoint=False)
    if not np.allclose(sino.angles, uniform, atol=1e-12):
        raise FormatError("only uniform [0, pi) angle grids are serializable")
    path.write_bytes(sino.data.astype("<f4").tobytes())
    _write_json(_sidecar_path(path), {
        "kind": "sinogram",
        "num_angles": sino.num_angles,
        "num_bins": sino.num_bins,
        "angle_range": [0.0, np.pi],
        "bin_spacing": sino.bin_spacing,
    })


def load_sinogram(path) -> Sinogram:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such sinogram file: {path}")
    side = _read_json(_sidecar_path(path))
    if side.get("kind") != "sinogram":
        raise FormatError(f"{path}: sidecar does not describe a sinogram")
    na, nb = int(side["num_angles"]), int(side["num_bins"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size != na * nb:
        raise FormatError(f"{path}: {raw.size} values but sidecar declares {na}x{nb}")
    angles = np.linspace(0.0, np.pi, na, endpoint=False)
    return Sinogram(data=raw.reshape(na, nb).astype(np.float64), angles=angles,
                    bin_spacing=float(side.get("bin_spacing", 1.0)))


# ---------------------------------------------------------------------------
# Manifest I/O and splitting

def save_manifest(manifest: PairManifest, path):
    path = Path(path)
    _write_json(path, {
        "format_version": manifest.format_version,
        "entries": [
            {"pair_id": e.pair_id, "uldct_path": e.uldct_path,
             "ndct_path": e.ndct_path, "split": e.split}
            for e in manifest.entries
        ],
    })


def load_manifest(path, check_files: bool = True) -> PairManifest:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such manifest: {path}")
    doc = _read_json(path)
    if doc.get("format_version") != MANIFEST_FORMAT_VERSION:
        raise ManifestError(
            f"unsupported manifest format_version {doc.get('format_version')!r}")
    try:
        entries = [PairEntry(**e) for e in doc["entries"]]
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed manifest entry: {exc}") from exc
    manifest = PairManifest(entries=tuple(entries))
    if check_files:
        missing = [e.pair_id for e in entries
                   if not (Path(e.uldct_path).exists() and Path(e.ndct_path).exists())]
        if missing:
            raise ManifestError(f"pairs reference missing files: {missing}")
    return manifest


def split_manifest(entries, fractions=(0.70, 0.15, 0.15), seed: int = 0) -> PairManifest:
    """Assign train/val/test splits by a seeded shuffle.

    Split boundaries are floor(n * cumulative_fraction), so train and val
    round down and test absorbs the remainder: 4310 entries at
    (0.70, 0.15, 0.15) yield sizes (3017, 646, 647).
    """
    entries = list(entries)
    if not entries:
        raise ValidationError("cannot split an empty entry list")
    fr = [float(f) for f in fractions]
    if len(fr) != 3 or any(f < 0 for f in fr):
        raise ValidationError("fractions must be three non-negative ratios")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise ValidationError(f"fractions sum to {sum(fr)}, expected 1")

    n = len(entries)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    # tiny epsilon keeps exact products like 4310*0.70 from flooring down
    b1 = int(np.floor(n * fr[0] + 1e-9))
    b2 = int(np.floor(n * (fr[0] + fr[1]) + 1e-9))
    split_of = np.empty(n, dtype=object)
    split_of[perm[:b1]] = "train"
    split_of[perm[b1:b2]] = "val"
    split_of[perm[b2:]] = "test"

    assigned = [
        PairEntry(pair_id=e.pair_id, uldct_path=e.uldct_path,
                  ndct_path=e.ndct_path, split=split_of[i])
        for i, e in enumerate(entries)
    ]
    return PairManifest(entries=tuple(assigned))
