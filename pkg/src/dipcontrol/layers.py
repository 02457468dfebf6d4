"""Spectrally controlled layers.

Two plug-in replacements for the standard convolution + batch-norm +
upsampling stack of image generators:

* Lipschitz normalization bounds each convolution's spectral norm by a
  constant ``lam`` and recenters the pre-activation by its channel mean
  (mean-only normalization) plus a learnable bias. Bounding the spectral
  norm caps the layer's Lipschitz constant and with it the magnitude of
  the high-frequency components the layer can produce, while mean-only
  centering, unlike full batch normalization, stays sensitive to the
  weight norm so the bound actually bites.

* Gaussian-controlled upsampling expands the input on a bed-of-nails
  grid and smooths it with a Gaussian interpolating filter whose width
  ``sigma`` sets the amount of low-pass bias: sigma 0 keeps the raw
  zero-stuffed expansion, larger sigma suppresses the spectral replicas
  more aggressively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff.spectral import power_iteration_sn
from .autodiff.tensor import Tensor, fixed_filter_conv, zero_insert

__all__ = [
    "LipschitzNormConfig",
    "GaussianUpsampleConfig",
    "lipschitz_normalize",
    "gaussian_kernel",
    "gaussian_upsample",
    "bilinear_kernel",
    "nearest_kernel",
    "full_batch_norm",
]


@dataclass
class LipschitzNormConfig:
    """Per-layer state for Lipschitz normalization.

    ``lam`` is the spectral-norm bound (None disables the bound, leaving
    only mean centering and the bias, the unconstrained control).
    ``u_state`` is the persistent power-iteration vector; one iteration
    per forward pass tracks the leading singular value over a run.
    ``bias`` is the learnable per-channel scalar added after centering.
    """

    lam: float | None
    u_state: np.ndarray
    bias: Tensor
    last_sigma: float = field(default=0.0, compare=False)

    @classmethod
    def create(cls, out_channels, lam, rng, dtype=np.float32):
        u = rng.standard_normal(out_channels).astype(dtype)
        bias = Tensor(np.zeros((1, out_channels, 1, 1), dtype=dtype), requires_grad=True)
        return cls(lam=lam, u_state=u, bias=bias)


def lipschitz_normalize(preact, weight, cfg):
    """Bound, center and bias a convolution pre-activation.

    Computes ``preact / max(1, sigma / lam) - mu + b`` where ``sigma``
    is the one-step power-iteration estimate of the spectral norm of
    ``weight`` reshaped to (out_channels, in_channels * kH * kW), and
    ``mu`` is the channel mean of the scaled pre-activation. The divisor
    is a constant for differentiation; gradients flow through the
    pre-activation, the mean and the bias only.
    """
    if cfg.lam is not None:
        out_c = weight.data.shape[0]
        mat = weight.data.reshape(out_c, -1)
        sigma, cfg.u_state = power_iteration_sn(mat, cfg.u_state, iterations=1)
        cfg.last_sigma = sigma
        scale = 1.0 / max(1.0, sigma / cfg.lam)
    else:
        scale = 1.0
    scaled = preact * scale if scale != 1.0 else preact
    mu = scaled.mean(axis=(0, 2, 3), keepdims=True)
    return scaled - mu + cfg.bias


def full_batch_norm(x):
    """Channel standardization (mean and variance), on raw arrays.

    Reference behaviour only: its output is invariant to the scale of
    the weights that produced ``x``, which is exactly why it cannot be
    combined with a spectral-norm bound. Kept for control experiments.
    """
    arr = x.data if isinstance(x, Tensor) else np.asarray(x)
    mu = arr.mean(axis=(0, 2, 3), keepdims=True)
    std = arr.std(axis=(0, 2, 3), keepdims=True)
    return (arr - mu) / (std + 1e-12)


@dataclass
class GaussianUpsampleConfig:
    """Upsampling factor, Gaussian width and interpolating-kernel size."""

    s: int = 2
    sigma: float = 0.5
    kernel_size: int = 5


def gaussian_kernel(sigma, size=5, scale=2):
    """Gaussian interpolating kernel on the integer grid.

    For ``sigma > 0`` the taps are exp(-(i^2 + j^2) / (2 sigma^2)) on a
    ``size`` x ``size`` grid centered at zero, normalized to a global
    sum of ``scale**2`` so that upsampling by ``scale`` preserves the
    signal level (zero insertion spreads each sample over scale^2
    positions). For ``sigma == 0`` the kernel is a pure unit delta and
    upsampling degenerates to the bed-of-nails expansion.

    The kernel's Fourier magnitude falls off like a Gaussian of inverse
    width, roughly exp(-2 pi^2 sigma^2 |k|^2): larger sigma damps every
    non-DC frequency harder, which is what makes the width a usable
    smoothing control.
    """
    if size % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {size}")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    half = size // 2
    if sigma == 0.0:
        kernel = np.zeros((size, size))
        kernel[half, half] = 1.0
        return kernel
    coords = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    kernel = np.outer(g, g)
    return kernel * (scale * scale / kernel.sum())


def bilinear_kernel(scale=2):
    """Tent interpolating kernel (classic bilinear upsampling)."""
    taps = np.array(
        [max(0.0, 1.0 - abs(i) / scale) for i in range(-(scale - 1), scale)],
        dtype=np.float64,
    )
    return np.outer(taps, taps)


def nearest_kernel(scale=2):
    """Box (sample replicating) kernel for nearest-neighbor upsampling."""
    taps = np.zeros(2 * scale - 1, dtype=np.float64)
    taps[: scale] = 1.0  # offsets -(scale-1)..0 replicate the left sample
    return np.outer(taps, taps)


def gaussian_upsample(x, cfg):
    """Bed-of-nails expansion followed by Gaussian interpolation.

    Output is ``cfg.s`` times larger per side and differentiable with
    respect to ``x``. With ``cfg.sigma == 0`` the result equals the raw
    zero-stuffed expansion exactly.
    """
    kernel = gaussian_kernel(cfg.sigma, cfg.kernel_size, cfg.s)
    return fixed_filter_conv(zero_insert(x, cfg.s), kernel)
