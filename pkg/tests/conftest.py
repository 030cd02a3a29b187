import numpy as np
import pytest

from ctpurify import (NoiseModel, ProjectionGeometry, common_mask,
                      lung_phantom, segment, simulate_uldct)

PHANTOM_SIZE = 128
PHANTOM_GEOM = ProjectionGeometry.for_image(PHANTOM_SIZE, num_angles=180)


@pytest.fixture(scope="session")
def phantom_pair():
    """One simulated (uldct, ndct, ground-truth mask) phantom pair."""
    ndct, gt_mask = lung_phantom(PHANTOM_SIZE)
    uldct = simulate_uldct(ndct, NoiseModel(dose_fraction=0.02, seed=11),
                           PHANTOM_GEOM)
    return uldct, ndct, gt_mask


@pytest.fixture(scope="session")
def phantom_common_mask(phantom_pair):
    uldct, ndct, _ = phantom_pair
    return common_mask(segment(uldct), segment(ndct))


def rng(seed=0):
    return np.random.default_rng(seed)
