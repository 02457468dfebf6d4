"""No-reference blur and sharpness estimates, PSNR, and auto-stopping.

An optimization run is stopped by watching the ratio r = blurriness /
sharpness of the generator output. Early on, the output is smooth: the
ratio is high. As the admissible high frequencies are fitted, the ratio
settles, and once two consecutive length-``n`` windows of the ratio
history have nearly equal means the run has converged for practical
purposes and further iterations are wasted.

Both image metrics are intentionally simple perceptual estimates. They
only need to be stable and monotone under blur; their absolute scale is
anchored by regression tests, not by any external implementation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

__all__ = ["blurriness", "sharpness", "psnr", "StoppingMonitor", "monitor_update"]

PSNR_CAP_DB = 100.0

_LUMA = np.array([0.299, 0.587, 0.114])


def _as_luminance(image):
    """Collapse (1,C,H,W), (C,H,W) or (H,W) to a 2D luminance plane."""
    arr = np.asarray(image.data if hasattr(image, "data") else image, dtype=np.float64)
    if arr.ndim == 4:
        arr = arr[0]
    if arr.ndim == 3:
        if arr.shape[0] == 3:
            arr = np.tensordot(_LUMA, arr, axes=([0], [0]))
        elif arr.shape[0] == 1:
            arr = arr[0]
        else:
            raise ValueError(f"expected 1 or 3 channels, got {arr.shape[0]}")
    elif arr.ndim != 2:
        raise ValueError(f"unsupported image rank {arr.ndim}")
    return arr


def blurriness(image):
    """Perceptual blur estimate in [0, 1]; higher means blurrier.

    The image is smoothed with 9-tap averaging filters, horizontally and
    vertically. In each direction, the total absolute neighbor variation
    that survives the smoothing (V = max(0, D_orig - D_blurred)) is
    compared against the original variation; a sharp image loses most of
    its variation to the blur, a blurry one barely changes. The final
    value is the worse (larger) of the two directions.

    A constant image has no variation to compare and reports 1.0 by
    convention (maximally blurry).
    """
    lum = _as_luminance(image)
    taps = np.full(9, 1.0 / 9.0)
    scores = []
    for axis in (0, 1):
        blurred = ndimage.correlate1d(lum, taps, axis=axis, mode="mirror")
        d_orig = np.abs(np.diff(lum, axis=axis))
        d_blur = np.abs(np.diff(blurred, axis=axis))
        variation = np.maximum(0.0, d_orig - d_blur)
        total = d_orig.sum()
        if total <= 0.0:
            return 1.0
        scores.append((total - variation.sum()) / total)
    return float(max(scores))


def sharpness(image):
    """Maximum-local-variation sharpness; 0 for constants, higher is sharper.

    Each pixel's local variation is the largest absolute difference to
    its 8 neighbors. Rank-based weights exp(rank percentile) emphasize
    the strongest variations (edges) over flat texture, and the spread
    (standard deviation) of the weighted variations is the score.
    """
    lum = _as_luminance(image)
    h, w = lum.shape
    mlv = np.zeros((h, w))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            shifted = np.abs(lum - np.roll(np.roll(lum, dy, axis=0), dx, axis=1))
            # roll wraps around; ignore the wrapped border rows/cols
            if dy == 1:
                shifted[0, :] = 0.0
            elif dy == -1:
                shifted[-1, :] = 0.0
            if dx == 1:
                shifted[:, 0] = 0.0
            elif dx == -1:
                shifted[:, -1] = 0.0
            np.maximum(mlv, shifted, out=mlv)
    flat = mlv.ravel()
    order = np.argsort(flat, kind="stable")
    ranks = np.empty_like(order, dtype=np.float64)
    ranks[order] = np.arange(flat.size)
    if flat.size > 1:
        ranks /= flat.size - 1
    weighted = flat * np.exp(ranks)
    return float(weighted.std())


def psnr(a, b):
    """Peak signal-to-noise ratio in dB for images nominally in [0, 1].

    Identical images report the documented cap of 100 dB; the cap also
    bounds near-identical comparisons so the scale stays finite.
    """
    x = np.asarray(a.data if hasattr(a, "data") else a, dtype=np.float64)
    y = np.asarray(b.data if hasattr(b, "data") else b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    mse = np.mean((x - y) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB))


@dataclass
class StoppingMonitor:
    """Sliding-window convergence test on the blur/sharpness ratio.

    Appends one ratio per evaluation; once ``2n`` ratios are recorded,
    the absolute difference between the means of the two most recent
    length-``n`` windows is compared against ``eps``. No decision is
    made before ``2n`` samples, and only the last ``2n`` matter.
    """

    n: int = 100
    eps: float = 0.01
    stride: int = 1
    history: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.n < 1 or self.eps < 0 or self.stride < 1:
            raise ValueError("need n >= 1, eps >= 0, stride >= 1")
        self.history = deque(self.history, maxlen=2 * self.n)

    def delta(self):
        """|mean(last n) - mean(previous n)|, or None before 2n samples."""
        if len(self.history) < 2 * self.n:
            return None
        seq = list(self.history)
        recent = sum(seq[self.n :]) / self.n
        previous = sum(seq[: self.n]) / self.n
        return abs(recent - previous)

    def update(self, r_t):
        """Record a ratio; return True when the optimization should stop."""
        if not np.isfinite(r_t):
            raise ValueError(f"ratio must be finite, got {r_t}")
        self.history.append(float(r_t))
        d = self.delta()
        return d is not None and d < self.eps


def monitor_update(monitor, r_t):
    """Functional form of :meth:`StoppingMonitor.update`."""
    return monitor.update(r_t)
