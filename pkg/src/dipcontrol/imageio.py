"""8-bit PNG loading/saving and CSV trace export.

PNG is the only image codec: lossless, ubiquitous, and it keeps codec
concerns out of the numerics. Compressed inputs (deblocking) must be
decoded to PNG beforehand. Trace files are plain CSV so any plotting
tool can consume them.
"""

from __future__ import annotations

import csv

import numpy as np
from PIL import Image

__all__ = ["load_image", "save_image", "write_trace_csv", "read_trace_csv"]

TRACE_FLOAT_FORMAT = "%.6g"


def load_image(path):
    """Read an 8-bit grayscale or RGB PNG as (1, C, H, W) float in [0, 1].

    Anything else (16-bit, palette, alpha) is rejected with a clear
    error rather than silently converted.
    """
    with Image.open(path) as img:
        if img.format != "PNG":
            raise ValueError(f"{path}: only PNG input is supported, got {img.format}")
        if img.mode not in ("L", "RGB"):
            raise ValueError(
                f"{path}: unsupported PNG mode {img.mode!r}; expected 8-bit L or RGB"
            )
        arr = np.asarray(img, dtype=np.float32) / 255.0
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = arr.transpose(2, 0, 1)
    return arr[None]


def save_image(image, path):
    """Quantize a [0, 1] image to 8 bits (round half up) and write a PNG."""
    arr = np.asarray(image.data if hasattr(image, "data") else image, dtype=np.float64)
    if arr.ndim == 4:
        arr = arr[0]
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[0] not in (1, 3):
        raise ValueError(f"cannot save image of shape {arr.shape}")
    quantized = np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    if quantized.shape[0] == 1:
        img = Image.fromarray(quantized[0], mode="L")
    else:
        img = Image.fromarray(quantized.transpose(1, 2, 0), mode="RGB")
    img.save(path, format="PNG")


def _format_cell(value):
    if value is None:
        return ""
    return TRACE_FLOAT_FORMAT % value


def write_trace_csv(rows, path, n_bands=None):
    """Write trace records as CSV.

    Header: ``iteration,loss,psnr,r_ratio,fbc_1,...,fbc_N``. PSNR cells
    are empty when no clean reference was available; floats use six
    significant digits. Refuses rows whose iterations do not strictly
    increase.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no trace rows to write")
    if n_bands is None:
        n_bands = len(rows[0].fbc)
    iters = [row.iteration for row in rows]
    if any(b <= a for a, b in zip(iters, iters[1:])):
        raise ValueError("trace iterations must be strictly increasing")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "loss", "psnr", "r_ratio"] + [f"fbc_{i+1}" for i in range(n_bands)])
        for row in rows:
            cells = [str(row.iteration), _format_cell(row.loss), _format_cell(row.psnr), _format_cell(row.r_ratio)]
            cells.extend(_format_cell(v) for v in row.fbc)
            writer.writerow(cells)


def read_trace_csv(path):
    """Parse a trace CSV back into plain dict rows (round-trip helper)."""
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        out = []
        for rec in reader:
            row = {"iteration": int(rec["iteration"])}
            for key, value in rec.items():
                if key == "iteration":
                    continue
                row[key] = float(value) if value else None
            out.append(row)
    return out
