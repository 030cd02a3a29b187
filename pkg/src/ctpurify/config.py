"""Pipeline configuration: one JSON file records a full reproducible run.

Precedence for the base seed is CLI flag > config file > CTPURIFY_SEED
environment variable > 0.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .core import FormatError, NoiseModel, ValidationError
from .segmentation import SegmentationParams
from .tomography import ProjectionGeometry

SEED_ENV_VAR = "CTPURIFY_SEED"


@dataclass(frozen=True)
class DenoiserSpec:
    kind: str = "gaussian"
    sigma: float = 2.0
    command: str = ""

    def __post_init__(self):
        if self.kind not in ("gaussian", "external"):
            raise ValidationError(f"unknown weak denoiser kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValidationError("gaussian denoiser needs sigma > 0")
        if self.kind == "external" and not self.command:
            raise ValidationError("external denoiser needs a command")


@dataclass(frozen=True)
class PipelineConfig:
    geometry: ProjectionGeometry = ProjectionGeometry()
    noise: NoiseModel = NoiseModel()
    segmentation: SegmentationParams = SegmentationParams()
    denoiser: DenoiserSpec = DenoiserSpec()
    split_fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)
    base_seed: int = 0
    strict: bool = False

    def to_dict(self) -> dict:
        return {
            "geometry": {
                "num_angles": self.geometry.num_angles,
                "num_bins": self.geometry.num_bins,
                "bin_spacing": self.geometry.bin_spacing,
            },
            "noise": {
                "dose_fraction": self.noise.dose_fraction,
                "incident_photons_n0": self.noise.incident_photons_n0,
                "electronic_sigma": self.noise.electronic_sigma,
                "mu_scale": self.noise.mu_scale,
                "seed": self.noise.seed,
            },
            "segmentation": {
                "bins": self.segmentation.bins,
                "min_lung_area": self.segmentation.min_lung_area,
            },
            "denoiser": {
                "kind": self.denoiser.kind,
                "sigma": self.denoiser.sigma,
                "command": self.denoiser.command,
            },
            "split_fractions": list(self.split_fractions),
            "base_seed": self.base_seed,
            "strict": self.strict,
        }


def config_from_dict(doc: dict) -> PipelineConfig:
    base = PipelineConfig()
    try:
        geo = {**base.to_dict()["geometry"], **doc.get("geometry", {})}
        noi = {**base.to_dict()["noise"], **doc.get("noise", {})}
        seg = {**base.to_dict()["segmentation"], **doc.get("segmentation", {})}
        den = {**base.to_dict()["denoiser"], **doc.get("denoiser", {})}
        return PipelineConfig(
            geometry=ProjectionGeometry(**geo),
            noise=NoiseModel(**noi),
            segmentation=SegmentationParams(**seg),
            denoiser=DenoiserSpec(**den),
            split_fractions=tuple(doc.get("split_fractions", base.split_fractions)),
            base_seed=int(doc.get("base_seed", base.base_seed)),
            strict=bool(doc.get("strict", base.strict)),
        )
    except TypeError as exc:
        raise FormatError(f"unknown config field: {exc}") from exc


def load_config(path) -> tuple[PipelineConfig, dict]:
    """Parse a config file; returns the config and the raw document."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such config file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"config {path} must hold a JSON object")
    return config_from_dict(doc), doc


def save_config(config: PipelineConfig, path):
    Path(path).write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def resolve_seed(cli_seed: int | None, config_doc: dict | None) -> int:
    """CLI flag > config file > CTPURIFY_SEED env var > 0."""
    if cli_seed is not None:
        return int(cli_seed)
    if config_doc is not None and "base_seed" in config_doc:
        return int(config_doc["base_seed"])
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise FormatError(f"{SEED_ENV_VAR} must be an integer") from exc
    return 0
