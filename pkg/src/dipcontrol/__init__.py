"""Controlled deep image prior.

Restores a single degraded image by optimizing an untrained
convolutional generator, measures the generator's spectral bias with a
frequency-band correspondence metric, controls the bias via
Lipschitz-normalized convolutions and Gaussian-controlled upsampling,
and stops optimization automatically from a no-reference
blur/sharpness ratio.
"""

from .autodiff import (
    AdamState,
    Tensor,
    adam_step,
    conv2d,
    fft2_magnitude,
    fixed_filter_conv,
    he_init,
    leaky_relu,
    make_rng,
    power_iteration_sn,
    sigmoid,
    zero_insert,
)
from .fbc import BandPartition, FbcBands, band_partition, fbc
from .imageio import load_image, read_trace_csv, save_image, write_trace_csv
from .layers import (
    GaussianUpsampleConfig,
    LipschitzNormConfig,
    bilinear_kernel,
    full_batch_norm,
    gaussian_kernel,
    gaussian_upsample,
    lipschitz_normalize,
    nearest_kernel,
)
from .networks import Model, NetworkSpec, build_network
from .quality import StoppingMonitor, blurriness, monitor_update, psnr, sharpness
from .synthetic import checkerboard, gaussian_blur, synthetic_photo
from .tasks import (
    DegradedObservation,
    DivergenceError,
    RunConfig,
    RunResult,
    TraceRecord,
    add_gaussian_noise,
    bernoulli_mask,
    central_mask,
    enhance,
    lanczos_downsample,
    lanczos_taps,
    lanczos_upsample,
    restore,
    task_loss,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BandPartition",
    "DegradedObservation",
    "DivergenceError",
    "FbcBands",
    "GaussianUpsampleConfig",
    "LipschitzNormConfig",
    "Model",
    "NetworkSpec",
    "RunConfig",
    "RunResult",
    "StoppingMonitor",
    "Tensor",
    "TraceRecord",
    "adam_step",
    "add_gaussian_noise",
    "band_partition",
    "bernoulli_mask",
    "bilinear_kernel",
    "blurriness",
    "build_network",
    "central_mask",
    "checkerboard",
    "conv2d",
    "enhance",
    "fbc",
    "fft2_magnitude",
    "fixed_filter_conv",
    "full_batch_norm",
    "gaussian_blur",
    "gaussian_kernel",
    "gaussian_upsample",
    "he_init",
    "lanczos_downsample",
    "lanczos_taps",
    "lanczos_upsample",
    "leaky_relu",
    "lipschitz_normalize",
    "load_image",
    "make_rng",
    "monitor_update",
    "nearest_kernel",
    "power_iteration_sn",
    "psnr",
    "read_trace_csv",
    "restore",
    "save_image",
    "sharpness",
    "sigmoid",
    "synthetic_photo",
    "task_loss",
    "write_trace_csv",
    "zero_insert",
]
