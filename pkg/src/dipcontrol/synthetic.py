"""Deterministic synthetic photographs for demos and tests.

Real-image statistics matter for everything in this library (power
spectra that decay with frequency, edges, smooth regions), but shipping
binary photos in the repository is avoidable: these generators compose
smooth gradients, disks, rectangles and band-limited texture into
reproducible images whose spectra behave like natural ones.
"""

from __future__ import annotations

import numpy as np

from .autodiff.optim import make_rng

__all__ = ["synthetic_photo", "checkerboard", "gaussian_blur"]


def synthetic_photo(height=128, width=128, channels=3, seed=0):
    """A natural-looking test image in [0, 1], (1, C, H, W) float32.

    Smooth illumination plus a few geometric objects with soft shadows
    and a touch of band-limited texture; the Fourier magnitude falls off
    with frequency roughly like a natural photograph's.
    """
    rng = make_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, height), np.linspace(0, 1, width), indexing="ij")

    base = 0.45 + 0.25 * np.sin(2 * np.pi * (0.7 * xx + 0.4 * yy) + rng.uniform(0, 2 * np.pi))
    base += 0.15 * np.cos(2 * np.pi * (1.3 * yy - 0.5 * xx) + rng.uniform(0, 2 * np.pi))

    img = np.repeat(base[None], channels, axis=0)
    for _ in range(6):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        r = rng.uniform(0.05, 0.25)
        softness = rng.uniform(0.005, 0.02)
        disk = 1.0 / (1.0 + np.exp((np.hypot(yy - cy, xx - cx) - r) / softness))
        color = rng.uniform(-0.35, 0.35, size=channels)
        img += color[:, None, None] * disk[None]
    for _ in range(3):
        y0, x0 = rng.uniform(0.0, 0.7, size=2)
        hh, ww = rng.uniform(0.1, 0.3, size=2)
        box = ((yy >= y0) & (yy <= y0 + hh) & (xx >= x0) & (xx <= x0 + ww)).astype(np.float64)
        color = rng.uniform(-0.3, 0.3, size=channels)
        img += color[:, None, None] * box[None]

    texture = rng.standard_normal((channels, height, width))
    spec = np.fft.fft2(texture)
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    rolloff = 1.0 / (1.0 + ((np.hypot(fy, fx)) / 0.08) ** 2)
    texture = np.real(np.fft.ifft2(spec * rolloff[None]))
    texture /= np.abs(texture).max()
    img += 0.05 * texture

    lo, hi = img.min(), img.max()
    img = (img - lo) / (hi - lo)
    return img[None].astype(np.float32)


def checkerboard(height=64, width=64, cell=1):
    """Binary checkerboard in (1, 1, H, W); the sharp extreme case."""
    yy, xx = np.meshgrid(np.arange(height) // cell, np.arange(width) // cell, indexing="ij")
    board = ((yy + xx) % 2).astype(np.float32)
    return board[None, None]


def gaussian_blur(image, sigma):
    """Gaussian-blur the spatial axes of a (1,C,H,W) array (test helper)."""
    from scipy import ndimage

    arr = np.asarray(image, dtype=np.float64)
    if sigma <= 0:
        return arr.copy()
    return ndimage.gaussian_filter(arr, sigma=(0, 0, sigma, sigma), mode="mirror")
