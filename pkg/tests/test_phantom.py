import numpy as np
import pytest
from scipy import ndimage

from ctpurify import (NoiseModel, ProjectionGeometry, RegionLabel,
                      ValidationError, lung_phantom, lung_phantom_pair,
                      shepp_logan)
from ctpurify.phantom import shepp_logan_body_mask

CONN4 = [[0, 1, 0], [1, 1, 1], [0, 1, 0]]


class TestSheppLogan:
    def test_unit_range(self):
        img = shepp_logan(128)
        assert img.data.min() >= 0.0 and img.data.max() <= 1.0

    def test_skull_ring_is_brightest(self):
        img = shepp_logan(256)
        assert img.data.max() == pytest.approx(1.0)

    def test_body_mask_covers_phantom(self):
        img = shepp_logan(128)
        mask = shepp_logan_body_mask(128)
        assert np.all(mask.labels[img.data > 0] == int(RegionLabel.BODY))

    def test_too_small_rejected(self):
        with pytest.raises(ValidationError):
            shepp_logan(8)


class TestLungPhantom:
    def test_exactly_two_lung_components(self):
        for size in (64, 128, 256):
            _, mask = lung_phantom(size)
            _, n = ndimage.label(mask.region(RegionLabel.LUNG), structure=CONN4)
            assert n == 2

    def test_intensity_levels(self):
        img, mask = lung_phantom(128)
        values = set(np.unique(img.data))
        assert values == {0.0, 0.05, 0.5, 0.7, 0.9}
        # dark parenchyma carries exactly the lung label
        assert np.all(mask.labels[img.data == 0.05] == int(RegionLabel.LUNG))
        # vessels and ribs are anatomy, not lung
        assert np.all(mask.labels[img.data == 0.7] == int(RegionLabel.BODY))
        assert np.all(mask.labels[img.data == 0.9] == int(RegionLabel.BODY))
        assert np.all(mask.labels[img.data == 0.0] == int(RegionLabel.BACKGROUND))

    def test_vessels_present_in_both_lungs(self):
        img, mask = lung_phantom(128)
        vessels = img.data == 0.7
        w = img.width
        assert vessels[:, :w // 2].any() and vessels[:, w // 2:].any()

    def test_deterministic(self):
        a_img, a_mask = lung_phantom(96)
        b_img, b_mask = lung_phantom(96)
        assert np.array_equal(a_img.data, b_img.data)
        assert np.array_equal(a_mask.labels, b_mask.labels)

    def test_total_partition(self):
        _, mask = lung_phantom(64)
        assert set(np.unique(mask.labels)) == {0, 1, 2}

    def test_too_small_rejected(self):
        with pytest.raises(ValidationError):
            lung_phantom(32)


class TestLungPhantomPair:
    def test_noised_companion_has_higher_std(self):
        # whole-image std at the canonical 256 size; lung std at desk size
        geom = ProjectionGeometry.for_image(256, num_angles=180)
        uldct, ndct, _ = lung_phantom_pair(
            256, NoiseModel(dose_fraction=0.02, seed=4), geom)
        assert uldct.data.std() > ndct.data.std()

    def test_noise_dominates_lung_region(self):
        geom = ProjectionGeometry.for_image(64, num_angles=60)
        uldct, ndct, mask = lung_phantom_pair(
            64, NoiseModel(dose_fraction=0.02, seed=4), geom)
        lung = mask.region(RegionLabel.LUNG)
        assert uldct.data[lung].std() > 10 * ndct.data[lung].std() + 1e-6

    def test_deterministic_under_seed(self):
        geom = ProjectionGeometry.for_image(64, num_angles=60)
        model = NoiseModel(dose_fraction=0.02, seed=5)
        a = lung_phantom_pair(64, model, geom)
        b = lung_phantom_pair(64, model, geom)
        assert np.array_equal(a[0].data, b[0].data)
