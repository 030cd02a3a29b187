"""Deterministic construction of purified training pairs and evaluation
labels for real-world ultra-low-dose CT denoising."""

from .config import DenoiserSpec, PipelineConfig, load_config, save_config
from .core import (CTPurifyError, FormatError, Image, ManifestError, NoiseModel,
                   PairEntry, PairManifest, RegionLabel, RegionMask, Sinogram,
                   ValidationError, load_image, load_manifest, load_mask,
                   load_sinogram, save_image, save_manifest, save_mask,
                   save_sinogram, split_manifest)
from .metrics import (HistDistance, RegionStats, region_stats, region_values,
                      rmse, wasserstein_1d)
from .phantom import lung_phantom, lung_phantom_pair, shepp_logan
from .purification import (ExternalDenoiser, GaussianDenoiser, LabelImage,
                           PipelineError, PurifiedPair, WeakDenoiser,
                           build_label, build_training_pair,
                           gaussian_baseline_denoiser, make_weak_denoiser,
                           run_pipeline, train_weak_denoiser_data)
from .segmentation import (OtsuResult, SegmentationParams, binarize,
                           common_mask, flood_fill_background, lung_region,
                           otsu_threshold, segment)
from .tomography import (ProjectionGeometry, inject_noise, iradon, radon,
                         simulate_uldct)

__version__ = "0.1.0"
