"""Frequency-band correspondence between an output and a target image.

The correspondence map is the elementwise ratio of the two centered
Fourier magnitude spectra. Because the map is symmetric around the zero
frequency, it is summarized by grouping bins into ``N`` radial bands of
uniform width and taking the mean ratio per band: a value of 1 in a band
means the output already carries that frequency range at the target's
magnitude, values near 0 mean the band has not been fitted yet. Watching
the per-band means over an optimization run exposes the spectral bias of
an untrained generator: low bands approach 1 long before high bands move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff.spectral import fft2_magnitude

__all__ = ["BandPartition", "FbcBands", "band_partition", "fbc"]


@dataclass(frozen=True)
class BandPartition:
    """Radial grouping of an H x W centered frequency grid.

    ``band_index_map`` holds labels 1..N per bin; band 1 contains the
    zero-frequency bin, band N the maximum-radius corners.
    """

    n_bands: int
    band_index_map: np.ndarray
    bin_counts: np.ndarray

    @property
    def shape(self):
        return self.band_index_map.shape


@dataclass
class FbcBands:
    """Mean correspondence per band at one optimization step."""

    values: np.ndarray
    step: int = 0

    def __iter__(self):
        return iter(self.values)


def band_partition(height, width, n_bands=5):
    """Partition the centered frequency grid into uniform radial bands.

    Every bin belongs to exactly one band. A bin at distance ``rho``
    from the center falls into band ``min(N, floor(rho / (R/N)) + 1)``
    where ``R`` is the corner distance, so band N reaches the corners
    and is never empty.
    """
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    if height * width < n_bands:
        raise ValueError("grid too small for the requested number of bands")
    cy, cx = height // 2, width // 2
    yy = np.arange(height)[:, None] - cy
    xx = np.arange(width)[None, :] - cx
    rho = np.sqrt(yy.astype(np.float64) ** 2 + xx.astype(np.float64) ** 2)
    radius = np.sqrt(float(max(cy, height - 1 - cy)) ** 2 + float(max(cx, width - 1 - cx)) ** 2)
    if radius == 0.0:
        labels = np.ones((height, width), dtype=np.int32)
    else:
        labels = np.minimum(n_bands, (rho / (radius / n_bands)).astype(np.int32) + 1)
    counts = np.bincount(labels.ravel(), minlength=n_bands + 1)[1:]
    return BandPartition(n_bands=n_bands, band_index_map=labels, bin_counts=counts)


def fbc(output_image, target_image, partition=None, eps=None, step=0):
    """Per-band mean magnitude-spectrum ratio of output over target.

    Parameters
    ----------
    output_image, target_image : Tensor or ndarray
        Same-shape images, (1, C, H, W), (C, H, W) or (H, W).
    partition : BandPartition, optional
        Defaults to five uniform radial bands for the image size.
    eps : float, optional
        Bins where the target magnitude falls below ``eps`` are left out
        of the band means (the raw ratio would be meaningless there).
        Defaults to ``1e-8 * max |F{target}|``.
    step : int
        Optimization iteration recorded on the result.

    Returns
    -------
    FbcBands
        Band means averaged over channels. A band whose every bin was
        excluded yields NaN, never a silent zero.
    """
    out_mag = fft2_magnitude(output_image)
    tgt_mag = fft2_magnitude(target_image)
    if out_mag.shape != tgt_mag.shape:
        raise ValueError(f"image shapes differ: {out_mag.shape} vs {tgt_mag.shape}")
    if not np.any(tgt_mag):
        raise ValueError("target image is identically zero")
    h, w = tgt_mag.shape[-2:]
    if partition is None:
        partition = band_partition(h, w)
    elif partition.shape != (h, w):
        raise ValueError(f"partition is {partition.shape}, images are {(h, w)}")
    if eps is None:
        eps = 1e-8 * float(tgt_mag.max())

    valid = tgt_mag >= eps
    ratio = np.zeros_like(tgt_mag)
    np.divide(out_mag, tgt_mag, out=ratio, where=valid)
    n_valid = valid.sum(axis=0)
    with np.errstate(invalid="ignore"):
        channel_mean = ratio.sum(axis=0) / n_valid  # NaN where every channel excluded

    labels = partition.band_index_map
    values = np.empty(partition.n_bands, dtype=np.float64)
    for band in range(1, partition.n_bands + 1):
        sel = channel_mean[labels == band]
        sel = sel[~np.isnan(sel)]
        values[band - 1] = sel.mean() if sel.size else np.nan
    return FbcBands(values=values, step=step)
