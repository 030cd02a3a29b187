"""Region-controlled pair and label construction.

Training inputs inherit real low-dose pixels in the background and
noised normal-dose pixels in anatomy, so a model trained on them must
learn both background denoising and structure-preserving denoising.
Evaluation labels keep normal-dose pixels everywhere except the lung
parenchyma, which carries the weakly denoised low-dose signal.  All
inheritance is hard per-region selection and therefore bit-exact.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import DenoiserSpec, PipelineConfig, save_config
from .core import (CTPurifyError, Image, NoiseModel, PairManifest, RegionLabel,
                   RegionMask, ValidationError, load_image, save_image, save_mask)
from .metrics import region_stats
from .segmentation import common_mask, segment
from .tomography import ProjectionGeometry, simulate_uldct


class PipelineError(CTPurifyError):
    """Batch processing failed (strict mode or too many pair failures)."""


@dataclass(frozen=True)
class PurifiedPair:
    input: Image        # purified low-dose training input
    target: Image       # untouched normal-dose image
    mask: RegionMask
    provenance: dict

    def __post_init__(self):
        if not (self.input.shape == self.target.shape == self.mask.shape):
            raise ValidationError("pair members must share dimensions")


@dataclass(frozen=True)
class LabelImage:
    label: Image        # purified evaluation label
    mask: RegionMask
    provenance: dict

    def __post_init__(self):
        if self.label.shape != self.mask.shape:
            raise ValidationError("label and mask must share dimensions")


class WeakDenoiser:
    """Deterministic Image -> Image smoother, effective in the lung region."""

    descriptor: str = "identity"

    def denoise(self, img: Image) -> Image:
        raise NotImplementedError


class GaussianDenoiser(WeakDenoiser):
    def __init__(self, sigma: float):
        if sigma <= 0:
            raise ValidationError("gaussian denoiser needs sigma > 0")
        self.sigma = float(sigma)
        self.descriptor = f"gaussian(sigma={self.sigma})"

    def denoise(self, img: Image) -> Image:
        out = ndimage.gaussian_filter(img.data.astype(np.float64), self.sigma,
                                      mode="reflect", truncate=3.0)
        return Image(data=np.clip(out, 0.0, 1.0),
                     meta={"stage": "weak_denoised", "denoiser": self.descriptor})


class ExternalDenoiser(WeakDenoiser):
    """Adapter for a trained model: `<cmd> <in-path> <out-path>`, exit 0."""

    def __init__(self, command: str):
        if not command:
            raise ValidationError("external denoiser needs a command")
        self.command = command
        self.descriptor = f"external({command})"

    def denoise(self, img: Image) -> Image:
        with tempfile.TemporaryDirectory(prefix="ctpurify-wd-") as tmp:
            in_path = Path(tmp) / "in.f32"
            out_path = Path(tmp) / "out.f32"
            save_image(img, in_path)
            proc = subprocess.run(
                shlex.split(self.command) + [str(in_path), str(out_path)],
                capture_output=True, text=True)
            if proc.returncode != 0:
                raise PipelineError(
                    f"external denoiser exited {proc.returncode}: "
                    f"{proc.stderr.strip()[:400]}")
            if not out_path.exists():
                raise PipelineError("external denoiser wrote no output file")
            out = load_image(out_path)
            if out.shape != img.shape:
                raise ValidationError(
                    f"external denoiser changed dimensions: "
                    f"{img.shape} -> {out.shape}")
        return Image(data=out.data,
                     meta={"stage": "weak_denoised", "denoiser": self.descriptor})


def gaussian_baseline_denoiser(sigma: float) -> GaussianDenoiser:
    """Unit-sum Gaussian smoothing, reflective borders, 3-sigma support."""
    return GaussianDenoiser(sigma)


def make_weak_denoiser(spec: DenoiserSpec) -> WeakDenoiser:
    if spec.kind == "gaussian":
        return GaussianDenoiser(spec.sigma)
    return ExternalDenoiser(spec.command)


def build_training_pair(uldct: Image, ndct: Image, mask: RegionMask,
                        model: NoiseModel,
                        geom: ProjectionGeometry | None = None) -> PurifiedPair:
    """Purified training input: real background, noised anatomy.

    Background pixels come bit-for-bit from the low-dose image; body and
    lung pixels come bit-for-bit from the noised normal-dose image.
    """
    if not (uldct.shape == ndct.shape == mask.shape):
        raise ValidationError("uldct, ndct, and mask must share dimensions")
    noised = simulate_uldct(ndct, model, geom)
    background = mask.region(RegionLabel.BACKGROUND)
    fused = np.where(background, uldct.data, noised.data)
    return PurifiedPair(
        input=Image(data=fused, meta={"stage": "purified_uldct"}),
        target=ndct,
        mask=mask,
        provenance={"background": "uldct", "body": "noised_ndct",
                    "lung": "noised_ndct"},
    )


def build_label(uldct: Image, ndct: Image, mask: RegionMask,
                wd: WeakDenoiser) -> LabelImage:
    """Purified evaluation label: lung from the weakly denoised low-dose
    image, everything else untouched normal-dose."""
    if not (uldct.shape == ndct.shape == mask.shape):
        raise ValidationError("uldct, ndct, and mask must share dimensions")
    wden = wd.denoise(uldct)
    lung = mask.region(RegionLabel.LUNG)
    fused = np.where(lung, wden.data, ndct.data)
    return LabelImage(
        label=Image(data=fused, meta={"stage": "purified_ndct"}),
        mask=mask,
        provenance={"background": "ndct", "body": "ndct",
                    "lung": "weak_denoised_uldct"},
    )


def train_weak_denoiser_data(manifest: PairManifest, model: NoiseModel,
                             geom: ProjectionGeometry | None = None,
                             out_dir=None) -> list[tuple[Image, Image]]:
    """Emit (simulated low-dose, normal-dose) pairs for denoiser training.

    Each pair gets its own derived seed, model.seed XOR the entry's
    position in the manifest, so emission order never matters.  The
    actual training is external.
    """
    train = [(k, e) for k, e in enumerate(manifest.entries) if e.split == "train"]
    if not train:
        raise ValidationError("manifest has no train split entries")
    pairs = []
    for k, entry in train:
        ndct = load_image(entry.ndct_path)
        sim = simulate_uldct(ndct, replace(model, seed=model.seed ^ k), geom)
        if out_dir is not None:
            pair_dir = Path(out_dir) / entry.pair_id
            pair_dir.mkdir(parents=True, exist_ok=True)
            save_image(sim, pair_dir / "input.f32")
            save_image(ndct, pair_dir / "target.f32")
        pairs.append((sim, ndct))
    return pairs


# ---------------------------------------------------------------------------
# Batch pipeline

def _stats_payload(img: Image, mask: RegionMask) -> dict:
    return {
        s.region.name.lower(): {
            "pixel_count": s.pixel_count, "mean": s.mean, "std": s.std,
            "min": s.min, "max": s.max,
        }
        for s in region_stats(img, mask)
    }


def _process_entry(args) -> dict:
    entry, index, config, out_root = args
    out_root = Path(out_root)
    row = {"pair_id": entry.pair_id, "split": entry.split, "warnings": []}
    try:
        uldct = load_image(entry.uldct_path)
        ndct = load_image(entry.ndct_path)
        mask = common_mask(segment(uldct, config.segmentation),
                           segment(ndct, config.segmentation))
        counts = np.bincount(mask.labels.ravel(), minlength=3)
        row["region_pixels"] = {l.name.lower(): int(counts[int(l)])
                                for l in RegionLabel}
        for label in RegionLabel:
            if counts[int(label)] == 0:
                row["warnings"].append(f"empty region {label.name.lower()}")

        pair_dir = out_root / entry.split / entry.pair_id
        pair_dir.mkdir(parents=True, exist_ok=True)
        model = replace(config.noise, seed=config.base_seed ^ index)

        if entry.split == "train":
            pair = build_training_pair(uldct, ndct, mask, model, config.geometry)
            save_image(pair.input, pair_dir / "input.f32")
            save_image(pair.target, pair_dir / "target.f32")
            save_mask(mask, pair_dir / "mask.u8")
            row["stats"] = {"input": _stats_payload(pair.input, mask),
                            "target": _stats_payload(pair.target, mask)}
        else:
            wd = make_weak_denoiser(config.denoiser)
            label = build_label(uldct, ndct, mask, wd)
            save_image(label.label, pair_dir / "label.f32")
            save_mask(mask, pair_dir / "mask.u8")
            row["stats"] = {"label": _stats_payload(label.label, mask),
                            "uldct": _stats_payload(uldct, mask)}
            lung = mask.region(RegionLabel.LUNG)
            if lung.any():
                u_std = float(uldct.data[lung].astype(np.float64).std())
                l_std = float(label.label.data[lung].astype(np.float64).std())
                row["lung_std_ratio"] = (l_std / u_std) if u_std > 0 else None
            else:
                row["lung_std_ratio"] = None
        row["ok"] = True
    except (CTPurifyError, FileNotFoundError, OSError) as exc:
        row["ok"] = False
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


@dataclass(frozen=True)
class PipelineReport:
    rows: tuple
    out_dir: str

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.rows if not r["ok"]]

    def to_dict(self) -> dict:
        return {"rows": list(self.rows),
                "pairs": len(self.rows),
                "failures": len(self.failures)}


def run_pipeline(manifest: PairManifest, config: PipelineConfig, out_dir,
                 jobs: int = 1) -> PipelineReport:
    """Build purified pairs for train entries and labels for val/test.

    Per-pair failures are recorded in the report without aborting the
    batch unless config.strict is set.  Reruns with identical inputs and
    config reproduce byte-identical output trees, independent of `jobs`.
    """
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    tasks = [(e, k, config, str(out_root))
             for k, e in enumerate(manifest.entries)]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_process_entry, tasks))
    else:
        rows = [_process_entry(t) for t in tasks]

    if config.strict:
        for row in rows:
            if not row["ok"]:
                raise PipelineError(
                    f"pair {row['pair_id']!r} failed: {row['error']}")

    report = PipelineReport(rows=tuple(rows), out_dir=str(out_root))
    save_config(config, out_root / "config.json")
    (out_root / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return report
