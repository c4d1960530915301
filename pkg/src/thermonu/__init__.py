"""Microbolometer nonuniformity characterization, simulation and temperature estimation."""

from .characterize import (
    characterize_camera,
    deskew,
    estimate_noise_variance,
    fit_ambient,
    fit_pixelwise,
    fit_radial,
    fit_spatial,
    smooth_coeffs,
)
from .dataset import (
    AugmentSpec,
    NormBounds,
    augment,
    denormalize_gl,
    denormalize_temp,
    generate_dataset,
    normalize_gl,
    normalize_temp,
)
from .estimate import LinearGD, estimate_linear, fit_linear_gd, invert_polynomial
from .frameio import FrameHeader, ingest_campaign, read_frame, write_frame
from .metrics import MetricsConfig, combined_loss, dssim, mae, psnr, ssim, tv
from .model import (
    BasisGrids,
    CameraModel,
    FitConfig,
    OperatingPoint,
    PixelwiseCoeffs,
    RadialCoeffs,
    SpatialPolyCoeffs,
    load_model,
    make_basis_grids,
    save_model,
)
from .simulate import NoiseSpec, degrade, gen_fpn, pixelwise_at, quantize, radial_at, simulate_frame

__version__ = "0.1.0"
