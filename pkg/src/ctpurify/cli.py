"""Command-line surface: per-stage commands and full-pipeline runs.

Every command is a thin adapter over a library call; outputs on disk are
byte-identical to direct module-call results under the same config.
Exit codes partition error classes: 0 ok, 2 usage, 3 missing input,
4 format, 5 manifest, 6 validation, 7 pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import PipelineConfig, SEED_ENV_VAR, load_config, resolve_seed
from .core import (CTPurifyError, FormatError, Image, ManifestError,
                   RegionLabel, RegionMask, ValidationError, load_image,
                   load_manifest, load_mask, load_sinogram, save_image,
                   save_mask, save_sinogram)
from .metrics import region_stats
from .phantom import lung_phantom, shepp_logan, shepp_logan_body_mask
from .purification import (PipelineError, build_label, build_training_pair,
                           make_weak_denoiser, run_pipeline)
from .segmentation import common_mask, segment
from .tomography import ProjectionGeometry, inject_noise, iradon, radon, simulate_uldct

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_FORMAT = 4
EXIT_MANIFEST = 5
EXIT_VALIDATION = 6
EXIT_PIPELINE = 7

# non-strict runs tolerate isolated bad slices but not systemic failure
FAILURE_FRACTION_LIMIT = 0.5


def _load_config_arg(path) -> tuple[PipelineConfig, dict | None]:
    if path is None:
        return PipelineConfig(), None
    return load_config(path)


def _stage_noise_model(config: PipelineConfig, doc: dict | None, args):
    seed = args.seed
    if seed is None:
        if doc is not None and "seed" in doc.get("noise", {}):
            seed = int(doc["noise"]["seed"])
        else:
            seed = resolve_seed(None, None)   # env var, then 0
    model = replace(config.noise, seed=seed)
    for attr, flag in (("dose_fraction", "dose"),
                       ("incident_photons_n0", "photons"),
                       ("electronic_sigma", "sigma_e"),
                       ("mu_scale", "mu_scale")):
        val = getattr(args, flag, None)
        if val is not None:
            model = replace(model, **{attr: val})
    return model


def _geometry(config: PipelineConfig, args) -> ProjectionGeometry:
    geom = config.geometry
    if getattr(args, "angles", None):
        geom = replace(geom, num_angles=args.angles)
    return geom


def _common_mask_for(uldct: Image, ndct: Image, config: PipelineConfig,
                     mask_path) -> RegionMask:
    if mask_path:
        return load_mask(mask_path)
    return common_mask(segment(uldct, config.segmentation),
                       segment(ndct, config.segmentation))


def _region_counts(mask: RegionMask) -> str:
    counts = np.bincount(mask.labels.ravel(), minlength=3)
    return ", ".join(f"{l.name.lower()}={int(counts[int(l)])}" for l in RegionLabel)


def cmd_phantom(args) -> int:
    config, doc = _load_config_arg(args.config)
    if args.size < 64:
        raise ValidationError("phantom size must be at least 64 pixels")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "lung":
        ndct, mask = lung_phantom(args.size)
    else:
        ndct = shepp_logan(args.size)
        mask = shepp_logan_body_mask(args.size)
    save_image(ndct, out / "ndct.f32")
    save_mask(mask, out / "mask.u8")
    wrote = ["ndct.f32", "mask.u8"]
    if args.dose is not None:
        model = _stage_noise_model(config, doc, args)
        uldct = simulate_uldct(ndct, model, _geometry(config, args))
        save_image(uldct, out / "uldct.f32")
        wrote.append("uldct.f32")
    print(f"phantom: {args.kind} {args.size}x{args.size} -> "
          f"{out} ({', '.join(wrote)})")
    return EXIT_OK


def cmd_segment(args) -> int:
    config, _ = _load_config_arg(args.config)
    mask = segment(load_image(args.input), config.segmentation)
    save_mask(mask, args.out)
    print(f"segment: {args.input} -> {args.out} ({_region_counts(mask)})")
    return EXIT_OK


def cmd_radon(args) -> int:
    config, _ = _load_config_arg(args.config)
    geom = _geometry(config, args)
    sino = radon(load_image(args.input), geom)
    save_sinogram(sino, args.out)
    print(f"radon: {args.input} -> {args.out} "
          f"({sino.num_angles} angles x {sino.num_bins} bins)")
    return EXIT_OK


def cmd_iradon(args) -> int:
    sino = load_sinogram(args.input)
    geom = ProjectionGeometry(num_angles=sino.num_angles,
                              num_bins=sino.num_bins,
                              bin_spacing=sino.bin_spacing)
    img = iradon(sino, geom, filter=args.filter, out_size=args.size or 0)
    save_image(img, args.out)
    print(f"iradon: {args.input} -> {args.out} "
          f"({img.width}x{img.height}, filter={args.filter})")
    return EXIT_OK


def cmd_add_noise(args) -> int:
    config, doc = _load_config_arg(args.config)
    model = _stage_noise_model(config, doc, args)
    noisy = inject_noise(load_sinogram(args.input), model)
    save_sinogram(noisy, args.out)
    print(f"add-noise: {args.input} -> {args.out} "
          f"(dose={model.dose_fraction}, seed={model.seed})")
    return EXIT_OK


def cmd_build_pair(args) -> int:
    config, doc = _load_config_arg(args.config)
    uldct, ndct = load_image(args.uldct), load_image(args.ndct)
    mask = _common_mask_for(uldct, ndct, config, args.mask)
    model = _stage_noise_model(config, doc, args)
    pair = build_training_pair(uldct, ndct, mask, model, config.geometry)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_image(pair.input, out / "input.f32")
    save_image(pair.target, out / "target.f32")
    save_mask(mask, out / "mask.u8")
    print(f"build-pair: -> {out} ({_region_counts(mask)})")
    return EXIT_OK


def cmd_build_label(args) -> int:
    config, _ = _load_config_arg(args.config)
    uldct, ndct = load_image(args.uldct), load_image(args.ndct)
    mask = _common_mask_for(uldct, ndct, config, args.mask)
    wd = make_weak_denoiser(config.denoiser)
    label = build_label(uldct, ndct, mask, wd)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_image(label.label, out / "label.f32")
    save_mask(mask, out / "mask.u8")
    print(f"build-label: -> {out} ({wd.descriptor}, {_region_counts(mask)})")
    return EXIT_OK


def cmd_stats(args) -> int:
    img = load_image(args.input)
    mask = load_mask(args.mask)
    rows = region_stats(img, mask)
    for s in rows:
        print(f"stats: {s.region.name.lower():<10} n={s.pixel_count:<8} "
              f"mean={s.mean:.6f} std={s.std:.6f} "
              f"min={s.min:.6f} max={s.max:.6f}")
    if args.out:
        payload = [{"region": s.region.name.lower(), "pixel_count": s.pixel_count,
                    "mean": s.mean, "std": s.std, "min": s.min, "max": s.max}
                   for s in rows]
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    config, doc = _load_config_arg(args.config)
    strict = bool(args.strict or config.strict)
    seed = resolve_seed(args.seed, doc)
    config = replace(config, base_seed=seed, strict=strict)
    manifest = load_manifest(args.manifest, check_files=strict)
    report = run_pipeline(manifest, config, args.out, jobs=args.jobs)
    n_fail = len(report.failures)
    print(f"run: {len(report.rows)} pairs -> {args.out} "
          f"({n_fail} failures, report.json written)")
    if n_fail and n_fail / len(report.rows) >= FAILURE_FRACTION_LIMIT:
        return EXIT_PIPELINE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctpurify",
        description="Region-controlled training pairs and labels for "
                    "ultra-low-dose CT denoising")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True, seed=False):
        if config:
            p.add_argument("--config", help="pipeline config JSON")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help=f"noise seed (default: config, then ${SEED_ENV_VAR})")

    p = sub.add_parser("phantom", help="generate a synthetic phantom")
    p.add_argument("kind", choices=["shepp-logan", "lung"])
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--dose", type=float, default=None,
                   help="also emit a noised companion at this dose fraction")
    p.add_argument("--angles", type=int, default=None)
    p.add_argument("--out", required=True)
    add_common(p, seed=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("segment", help="three-way region mask for one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("radon", help="forward projection to a sinogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--angles", type=int, default=None)
    add_common(p)
    p.set_defaults(func=cmd_radon)

    p = sub.add_parser("iradon", help="filtered back-projection to an image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--filter", choices=["ram-lak", "none"], default="ram-lak")
    p.add_argument("--size", type=int, default=None)
    p.set_defaults(func=cmd_iradon)

    p = sub.add_parser("add-noise", help="dose-calibrated sinogram noise")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dose", type=float, default=None)
    p.add_argument("--photons", type=float, default=None)
    p.add_argument("--sigma-e", dest="sigma_e", type=float, default=None)
    p.add_argument("--mu-scale", dest="mu_scale", type=float, default=None)
    add_common(p, seed=True)
    p.set_defaults(func=cmd_add_noise)

    p = sub.add_parser("build-pair", help="purified training pair for one slice")
    p.add_argument("--uldct", required=True)
    p.add_argument("--ndct", required=True)
    p.add_argument("--mask", default=None, help="precomputed common mask")
    p.add_argument("--out", required=True)
    add_common(p, seed=True)
    p.set_defaults(func=cmd_build_pair)

    p = sub.add_parser("build-label", help="purified evaluation label for one slice")
    p.add_argument("--uldct", required=True)
    p.add_argument("--ndct", required=True)
    p.add_argument("--mask", default=None, help="precomputed common mask")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_build_label)

    p = sub.add_parser("stats", help="per-region statistics of one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", default=None, help="optional JSON output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="full pipeline over a pair manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true")
    add_common(p, seed=True)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MANIFEST
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (ValidationError, CTPurifyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
