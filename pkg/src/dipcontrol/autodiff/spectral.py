"""Magnitude spectra and spectral-norm estimation.

The 2D transform is numpy's FFT (mixed-radix, any image size); it is
used for analysis only and never participates in differentiation. The
convention is unnormalized: the DC bin of a constant image ``c`` equals
``c * H * W``.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

__all__ = ["fft2_magnitude", "power_iteration_sn"]


def fft2_magnitude(image):
    """Per-channel centered magnitude spectrum of an image.

    Parameters
    ----------
    image : Tensor or ndarray
        (1, C, H, W), (C, H, W) or (H, W); values are promoted to
        float64 before the transform.

    Returns
    -------
    ndarray
        (C, H, W) float64 array of |FFT2| per channel with the zero
        frequency shifted to index (H//2, W//2).
    """
    arr = image.data if isinstance(image, Tensor) else np.asarray(image)
    if arr.ndim == 2:
        arr = arr[None]
    elif arr.ndim == 4:
        if arr.shape[0] != 1:
            raise ValueError("expected a single image, got a batch")
        arr = arr[0]
    elif arr.ndim != 3:
        raise ValueError(f"unsupported image rank {arr.ndim}")
    spec = np.fft.fft2(arr.astype(np.float64), axes=(-2, -1))
    return np.abs(np.fft.fftshift(spec, axes=(-2, -1)))


def power_iteration_sn(weight_matrix, u_state, iterations=1):
    """Estimate the largest singular value by the power method.

    ``u_state`` (length = row count) persists across calls, so a single
    iteration per optimizer step converges over the course of a run.

    Returns
    -------
    (float, ndarray)
        The spectral-norm estimate and the updated left vector. A zero
        matrix yields sigma 0 with ``u_state`` returned unchanged.
    """
    w = np.asarray(weight_matrix)
    if w.ndim != 2:
        raise ValueError("weight must be reshaped to a 2D matrix")
    u = np.asarray(u_state, dtype=w.dtype)
    if u.shape != (w.shape[0],):
        raise ValueError(f"u_state must have length {w.shape[0]}, got {u.shape}")
    if not np.any(u):
        raise ValueError("u_state must be non-zero")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")

    for _ in range(iterations):
        wv = w.T @ u
        nv = np.linalg.norm(wv)
        if nv == 0.0:
            return 0.0, np.asarray(u_state)
        v = wv / nv
        wu = w @ v
        nu = np.linalg.norm(wu)
        if nu == 0.0:
            return 0.0, np.asarray(u_state)
        u = wu / nu
    sigma = float(u @ (w @ v))
    return sigma, u
