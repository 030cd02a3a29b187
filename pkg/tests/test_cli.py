import json

import numpy as np
import pytest

from ctpurify import (Image, NoiseModel, PairEntry, PairManifest,
                      ProjectionGeometry, RegionLabel, load_image, load_mask,
                      load_sinogram, lung_phantom, save_image, save_manifest,
                      simulate_uldct)
from ctpurify.cli import (EXIT_FORMAT, EXIT_MANIFEST, EXIT_MISSING_INPUT,
                          EXIT_OK, EXIT_VALIDATION, main)


def write_config(tmp_path, **over):
    doc = {
        "geometry": {"num_angles": 60},
        "noise": {"dose_fraction": 0.02, "seed": 5},
        **over,
    }
    p = tmp_path / "config.json"
    p.write_text(json.dumps(doc))
    return str(p)


def make_phantom(tmp_path, name="ph", size=64, dose=None, seed=0):
    out = tmp_path / name
    args = ["phantom", "lung", "--size", str(size), "--out", str(out),
            "--seed", str(seed), "--angles", "60"]
    if dose is not None:
        args += ["--dose", str(dose)]
    assert main(args) == EXIT_OK
    return out


class TestPhantomCommand:
    def test_writes_image_and_mask(self, tmp_path):
        out = make_phantom(tmp_path)
        img = load_image(out / "ndct.f32")
        mask = load_mask(out / "mask.u8")
        assert img.shape == (64, 64) == mask.shape

    def test_noised_companion(self, tmp_path):
        out = make_phantom(tmp_path, dose=0.02)
        clean = load_image(out / "ndct.f32")
        noisy = load_image(out / "uldct.f32")
        mask = load_mask(out / "mask.u8")
        lung = mask.region(RegionLabel.LUNG)
        assert noisy.data[lung].std() > clean.data[lung].std()

    def test_same_seed_byte_identical(self, tmp_path):
        a = make_phantom(tmp_path, "a", dose=0.02, seed=9)
        b = make_phantom(tmp_path, "b", dose=0.02, seed=9)
        for name in ("ndct.f32", "mask.u8", "uldct.f32"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_shepp_logan_kind(self, tmp_path):
        out = tmp_path / "sl"
        assert main(["phantom", "shepp-logan", "--size", "64",
                     "--out", str(out)]) == EXIT_OK
        assert load_image(out / "ndct.f32").data.max() == pytest.approx(1.0)


class TestStageCommands:
    def test_segment_matches_ground_truth(self, tmp_path):
        out = make_phantom(tmp_path, size=128)
        mask_path = tmp_path / "seg.u8"
        assert main(["segment", "--in", str(out / "ndct.f32"),
                     "--out", str(mask_path)]) == EXIT_OK
        seg = load_mask(mask_path)
        gt = load_mask(out / "mask.u8")
        assert np.mean(seg.labels == gt.labels) >= 0.98

    def test_radon_iradon_round_trip(self, tmp_path):
        out = make_phantom(tmp_path, size=128)
        sino_path = tmp_path / "sino.f32"
        rec_path = tmp_path / "rec.f32"
        assert main(["radon", "--in", str(out / "ndct.f32"),
                     "--out", str(sino_path), "--angles", "180"]) == EXIT_OK
        assert main(["iradon", "--in", str(sino_path), "--out", str(rec_path),
                     "--size", "128"]) == EXIT_OK
        rec = load_image(rec_path)
        ndct = load_image(out / "ndct.f32")
        n = 128
        c = (n - 1) / 2
        ys, xs = np.mgrid[0:n, 0:n]
        circle = (xs - c) ** 2 + (ys - c) ** 2 <= (n / 2) ** 2
        rmse = np.sqrt(np.mean((rec.data - ndct.data)[circle] ** 2))
        assert rmse < 0.05

    def test_add_noise_deterministic(self, tmp_path):
        out = make_phantom(tmp_path, size=64)
        sino = tmp_path / "s.f32"
        main(["radon", "--in", str(out / "ndct.f32"), "--out", str(sino),
              "--angles", "30"])
        n1, n2 = tmp_path / "n1.f32", tmp_path / "n2.f32"
        for target in (n1, n2):
            assert main(["add-noise", "--in", str(sino), "--out", str(target),
                         "--dose", "0.02", "--seed", "77"]) == EXIT_OK
        assert n1.read_bytes() == n2.read_bytes()
        assert not np.array_equal(load_sinogram(n1).data, load_sinogram(sino).data)

    def test_stats_echoes_construction_values(self, tmp_path, capsys):
        out = make_phantom(tmp_path, size=128)
        assert main(["stats", "--in", str(out / "ndct.f32"),
                     "--mask", str(out / "mask.u8"),
                     "--out", str(tmp_path / "stats.json")]) == EXIT_OK
        rows = json.loads((tmp_path / "stats.json").read_text())
        by_region = {r["region"]: r for r in rows}
        assert by_region["lung"]["mean"] == pytest.approx(0.05, abs=1e-9)
        assert by_region["background"]["mean"] == pytest.approx(0.0, abs=1e-9)

    def test_build_pair_matches_direct_call(self, tmp_path):
        ph = make_phantom(tmp_path, size=64, dose=0.02, seed=3)
        cfg = write_config(tmp_path)
        out = tmp_path / "pairout"
        assert main(["build-pair", "--uldct", str(ph / "uldct.f32"),
                     "--ndct", str(ph / "ndct.f32"), "--out", str(out),
                     "--config", cfg, "--seed", "5"]) == EXIT_OK
        from ctpurify import build_training_pair, common_mask, segment
        uldct = load_image(ph / "uldct.f32")
        ndct = load_image(ph / "ndct.f32")
        mask = common_mask(segment(uldct), segment(ndct))
        pair = build_training_pair(
            uldct, ndct, mask, NoiseModel(dose_fraction=0.02, seed=5),
            ProjectionGeometry(num_angles=60))
        assert np.array_equal(load_image(out / "input.f32").data,
                              pair.input.data.astype(np.float32).astype(np.float64))
        assert np.array_equal(load_mask(out / "mask.u8").labels, mask.labels)

    def test_build_label_output(self, tmp_path):
        ph = make_phantom(tmp_path, size=64, dose=0.02, seed=3)
        out = tmp_path / "labelout"
        assert main(["build-label", "--uldct", str(ph / "uldct.f32"),
                     "--ndct", str(ph / "ndct.f32"), "--out", str(out)]) == EXIT_OK
        label = load_image(out / "label.f32")
        mask = load_mask(out / "mask.u8")
        ndct = load_image(ph / "ndct.f32")
        body = mask.region(RegionLabel.BODY)
        assert np.allclose(label.data[body], ndct.data[body], atol=1e-7)


def build_manifest(tmp_path, n=4, size=64):
    ndct, _ = lung_phantom(size)
    geom = ProjectionGeometry.for_image(size, num_angles=60)
    entries = []
    splits = (["train"] * (n - 2) + ["val", "test"]) if n >= 3 else ["train"] * n
    for i in range(n):
        d = tmp_path / "data" / f"p{i}"
        d.mkdir(parents=True, exist_ok=True)
        u = simulate_uldct(ndct, NoiseModel(dose_fraction=0.02, seed=i), geom)
        save_image(u, d / "u.f32")
        save_image(ndct, d / "n.f32")
        entries.append(PairEntry(pair_id=f"p{i}", uldct_path=str(d / "u.f32"),
                                 ndct_path=str(d / "n.f32"), split=splits[i]))
    path = tmp_path / "manifest.json"
    save_manifest(PairManifest(entries=tuple(entries)), path)
    return path


class TestRunCommand:
    def test_happy_path(self, tmp_path):
        manifest = build_manifest(tmp_path)
        cfg = write_config(tmp_path)
        assert main(["run", "--manifest", str(manifest), "--config", cfg,
                     "--out", str(tmp_path / "out"), "--seed", "1"]) == EXIT_OK
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        assert doc["pairs"] == 4 and doc["failures"] == 0
        # effective config is echoed into the output tree
        echoed = json.loads((tmp_path / "out" / "config.json").read_text())
        assert echoed["base_seed"] == 1

    def test_missing_file_strict_names_pair(self, tmp_path, capsys):
        manifest = build_manifest(tmp_path, n=3)
        (tmp_path / "data" / "p1" / "u.f32").unlink()
        code = main(["run", "--manifest", str(manifest),
                     "--out", str(tmp_path / "out"), "--strict"])
        assert code == EXIT_MANIFEST
        assert "p1" in capsys.readouterr().err

    def test_missing_file_non_strict_fail_soft(self, tmp_path):
        manifest = build_manifest(tmp_path, n=4)
        (tmp_path / "data" / "p1" / "u.f32").unlink()
        code = main(["run", "--manifest", str(manifest),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        assert doc["failures"] == 1


class TestSeedPrecedence:
    def test_env_var_lowest_precedence(self, tmp_path, monkeypatch):
        manifest = build_manifest(tmp_path, n=2)
        monkeypatch.setenv("CTPURIFY_SEED", "33")
        assert main(["run", "--manifest", str(manifest),
                     "--out", str(tmp_path / "o1")]) == EXIT_OK
        echoed = json.loads((tmp_path / "o1" / "config.json").read_text())
        assert echoed["base_seed"] == 33

    def test_config_beats_env(self, tmp_path, monkeypatch):
        manifest = build_manifest(tmp_path, n=2)
        cfg = write_config(tmp_path, base_seed=44)
        monkeypatch.setenv("CTPURIFY_SEED", "33")
        main(["run", "--manifest", str(manifest), "--config", cfg,
              "--out", str(tmp_path / "o2")])
        echoed = json.loads((tmp_path / "o2" / "config.json").read_text())
        assert echoed["base_seed"] == 44

    def test_flag_beats_config(self, tmp_path):
        manifest = build_manifest(tmp_path, n=2)
        cfg = write_config(tmp_path, base_seed=44)
        main(["run", "--manifest", str(manifest), "--config", cfg,
              "--seed", "55", "--out", str(tmp_path / "o3")])
        echoed = json.loads((tmp_path / "o3" / "config.json").read_text())
        assert echoed["base_seed"] == 55


class TestExitCodes:
    def test_missing_input_image(self, tmp_path):
        assert main(["segment", "--in", str(tmp_path / "nope.f32"),
                     "--out", str(tmp_path / "m.u8")]) == EXIT_MISSING_INPUT

    def test_malformed_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["segment", "--in", str(tmp_path / "x.f32"),
                     "--out", str(tmp_path / "m.u8"),
                     "--config", str(bad)]) == EXIT_FORMAT

    def test_validation_error(self, tmp_path):
        img = Image(data=np.full((16, 16), 0.5))
        save_image(img, tmp_path / "const.f32")
        assert main(["segment", "--in", str(tmp_path / "const.f32"),
                     "--out", str(tmp_path / "m.u8")]) == EXIT_VALIDATION

    def test_usage_error(self):
        assert main(["no-such-command"]) == 2
