"""Degradation operators, task losses, and the single-image restoration loop.

A restoration run optimizes an untrained generator so that its output,
pushed through the task's forward operator, matches one degraded
observation:

* ``identity``: denoising, deblocking and smoothing (the output itself
  must match the observation),
* ``mask``: inpainting (only observed pixels contribute to the loss),
* ``downsample``: super-resolution (the output is Lanczos-downsampled
  before comparison, so the network hallucinates the high resolution).

The loss is mean squared error in all cases. Degraded observations are
kept as floats and never clipped; only saved outputs are quantized.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff.optim import AdamState, adam_step, make_rng
from .autodiff.tensor import Tensor, fixed_filter_conv
from .fbc import band_partition, fbc
from .networks import NetworkSpec, build_network
from .quality import StoppingMonitor, blurriness, psnr, sharpness

__all__ = [
    "DegradedObservation",
    "RunConfig",
    "RunResult",
    "TraceRecord",
    "DivergenceError",
    "add_gaussian_noise",
    "bernoulli_mask",
    "central_mask",
    "lanczos_taps",
    "lanczos_downsample",
    "lanczos_upsample",
    "task_loss",
    "restore",
    "enhance",
]

OPERATORS = ("identity", "mask", "downsample")
SHARPNESS_FLOOR = 1e-12


class DivergenceError(RuntimeError):
    """Raised when the loss or a gradient turns NaN; carries diagnostics."""

    def __init__(self, message, iteration, trace):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


def as_image_array(image):
    """Normalize (H,W), (C,H,W) or (1,C,H,W) input to a (1,C,H,W) float array."""
    arr = np.asarray(image.data if isinstance(image, Tensor) else image)
    if arr.ndim == 2:
        arr = arr[None, None]
    elif arr.ndim == 3:
        arr = arr[None]
    elif arr.ndim != 4:
        raise ValueError(f"unsupported image rank {arr.ndim}")
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return arr


@dataclass
class DegradedObservation:
    """One degraded image plus its forward-operator tag.

    ``mask`` (1 = observed) must be present exactly when the operator is
    ``mask``; ``factor`` applies to ``downsample`` only. An optional
    clean reference is carried for evaluation and never enters the loss.
    """

    y0: np.ndarray
    operator: str = "identity"
    mask: np.ndarray | None = None
    factor: int = 1
    clean_reference: np.ndarray | None = None

    def __post_init__(self):
        self.y0 = as_image_array(self.y0)
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if (self.mask is not None) != (self.operator == "mask"):
            raise ValueError("mask must be given exactly when operator == 'mask'")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=np.float32)
            if mask.ndim == 2:
                mask = mask[None, None]
            if mask.shape[-2:] != self.y0.shape[-2:]:
                raise ValueError("mask size must match the observation")
            if not mask.any():
                raise ValueError("mask drops every pixel; nothing to fit")
            self.mask = mask
        if self.operator == "downsample" and self.factor < 2:
            raise ValueError("downsample factor must be >= 2")
        if self.clean_reference is not None:
            self.clean_reference = as_image_array(self.clean_reference)


def add_gaussian_noise(image, sigma_255, rng):
    """Additive white Gaussian noise with sigma on the 8-bit scale.

    The result is a float image and is deliberately not clipped, so the
    noise statistics stay unbiased.
    """
    arr = as_image_array(image)
    if sigma_255 == 0:
        return arr.copy()
    noise = rng.normal(0.0, sigma_255 / 255.0, size=arr.shape)
    return (arr + noise.astype(arr.dtype)).astype(arr.dtype)


def bernoulli_mask(height, width, drop_prob, rng):
    """Random per-pixel mask; each pixel is dropped with ``drop_prob``."""
    if not 0.0 <= drop_prob <= 1.0:
        raise ValueError("drop_prob must be in [0, 1]")
    return (rng.random((height, width)) >= drop_prob).astype(np.float32)


def central_mask(height, width, ratio):
    """Centered square hole covering ``ratio`` of the image area.

    The hole side is round(sqrt(ratio * h * w)) (half away from zero),
    offsets use floor division.
    """
    if not 0.0 <= ratio < 1.0:
        raise ValueError("ratio must be in [0, 1)")
    mask = np.ones((height, width), dtype=np.float32)
    side = int(np.floor(np.sqrt(ratio * height * width) + 0.5))
    if side > 0:
        top = (height - side) // 2
        left = (width - side) // 2
        mask[top : top + side, left : left + side] = 0.0
    return mask


def lanczos_taps(factor, a=3):
    """1D Lanczos-windowed sinc taps stretched for a stride-``factor`` grid.

    Unit sum; for factor 1 the taps reduce to a discrete delta (the
    kernel is 1 at zero and 0 at nonzero integers), so stride-1 filtering
    is an exact identity.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    xs = np.arange(-(a * factor - 1), a * factor)
    t = xs / factor
    taps = np.sinc(t) * np.sinc(t / a)
    return taps / taps.sum()


def lanczos_downsample(image, factor):
    """Differentiable antialiased downsampling by an integer factor.

    Separable Lanczos filter (a = 3) applied with stride ``factor`` on a
    grid aligned at multiples of the factor. Image sides must be
    divisible by the factor; the caller handles any padding.
    """
    x = image if isinstance(image, Tensor) else Tensor(as_image_array(image))
    h, w = x.data.shape[-2:]
    if h % factor or w % factor:
        raise ValueError(f"image sides {h}x{w} must be divisible by factor {factor}")
    taps = lanczos_taps(factor)
    return fixed_filter_conv(x, np.outer(taps, taps), stride=factor)


def lanczos_upsample(image, factor):
    """Lanczos interpolation to a ``factor`` times larger grid.

    Plain fixed upsampling (zero insertion followed by a gain-factor**2
    Lanczos filter); the reference baseline that restoration runs are
    compared against for super-resolution.
    """
    from .autodiff.tensor import zero_insert  # local import avoids cycle churn

    x = image if isinstance(image, Tensor) else Tensor(as_image_array(image))
    taps = lanczos_taps(factor) * factor
    out = fixed_filter_conv(zero_insert(x, factor), np.outer(taps, taps))
    return out


def task_loss(output, obs):
    """Mean squared data term for the observation's forward operator."""
    if obs.operator == "identity":
        if output.data.shape != obs.y0.shape:
            raise ValueError(f"output {output.data.shape} != observation {obs.y0.shape}")
        d = output - obs.y0
        return (d * d).mean()
    if obs.operator == "mask":
        if output.data.shape != obs.y0.shape:
            raise ValueError(f"output {output.data.shape} != observation {obs.y0.shape}")
        channels = obs.y0.shape[1]
        observed = float(obs.mask.sum()) * channels
        d = (output - obs.y0) * obs.mask
        return (d * d).sum() * (1.0 / observed)
    down = lanczos_downsample(output, obs.factor)
    if down.data.shape != obs.y0.shape:
        raise ValueError(f"downsampled output {down.data.shape} != observation {obs.y0.shape}")
    d = down - obs.y0
    return (d * d).mean()


@dataclass
class RunConfig:
    """Everything that determines a restoration run, seed included."""

    network: NetworkSpec = field(default_factory=NetworkSpec)
    max_iters: int = 10_000
    stopping: bool = False
    stop_n: int = 100
    stop_eps: float = 0.01
    stop_stride: int = 1
    fbc_every: int = 1
    n_bands: int = 5
    seed: int = 0
    log_every: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.fbc_every < 1:
            raise ValueError("fbc_every must be >= 1")


@dataclass
class TraceRecord:
    iteration: int
    loss: float
    psnr: float | None
    r_ratio: float | None
    fbc: np.ndarray


@dataclass
class RunResult:
    restored: np.ndarray
    stop_iteration: int
    trace: list
    wall_time: float


def _pad_to_multiple(arr, multiple):
    """Reflect-pad the spatial sides of (1,C,H,W) up to the next multiple."""
    h, w = arr.shape[-2:]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return arr, (h, w)
    padded = np.pad(arr, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="reflect")
    return padded, (h, w)


def restore(obs, cfg):
    """Fit an untrained generator to one degraded observation.

    Builds the network and its noise input from ``cfg.seed``, runs Adam
    (lr 0.001, betas 0.9/0.999) on the task loss, records a trace row
    every ``cfg.fbc_every`` iterations (loss, PSNR against the clean
    reference when available, blur/sharpness ratio, per-band
    correspondence against the observation), and stops early when the
    ratio monitor converges, if stopping is enabled.

    Returns the output at the stop iteration, cropped back to the
    observation's geometry.
    """
    rng = make_rng(cfg.seed)
    spec = cfg.network
    stage_factor = 2**spec.stages if spec.architecture in ("decoder", "encoder-decoder") else 1

    if obs.operator == "downsample":
        pad_mult = obs.factor * stage_factor // np.gcd(obs.factor, stage_factor)
        y0_fit, (h_low, w_low) = _pad_to_multiple(obs.y0, max(1, pad_mult // obs.factor))
        target_hw = (y0_fit.shape[-2] * obs.factor, y0_fit.shape[-1] * obs.factor)
        out_hw = (h_low * obs.factor, w_low * obs.factor)
        obs_fit = DegradedObservation(y0_fit, "downsample", factor=obs.factor)
    else:
        y0_fit, (h0, w0) = _pad_to_multiple(obs.y0, stage_factor)
        target_hw = y0_fit.shape[-2:]
        out_hw = (h0, w0)
        if obs.operator == "mask":
            mask_fit, _ = _pad_to_multiple(obs.mask, stage_factor)
            obs_fit = DegradedObservation(y0_fit, "mask", mask=mask_fit)
        else:
            obs_fit = DegradedObservation(y0_fit, "identity")

    model = build_network(spec, target_hw, rng)
    z = model.sample_input(rng)
    params = model.parameters()
    state = AdamState.for_params([p.data for p in params])

    # FBC is measured against the (unpadded) observation for same-size
    # operators and against the observation in low-resolution space for
    # super-resolution, where output and target sizes differ.
    fbc_h, fbc_w = obs.y0.shape[-2:]
    partition = band_partition(fbc_h, fbc_w, cfg.n_bands)
    monitor = StoppingMonitor(n=cfg.stop_n, eps=cfg.stop_eps, stride=cfg.stop_stride)
    reference = obs.clean_reference

    trace = []
    t_start = time.perf_counter()
    stop_iteration = cfg.max_iters
    stopped = False

    def crop(out_data):
        return out_data[:, :, : out_hw[0], : out_hw[1]]

    def fbc_view(out_t):
        if obs.operator == "downsample":
            low = lanczos_downsample(Tensor(crop(out_t.data)), obs.factor)
            return low.data
        return crop(out_t.data)

    def record(t, loss_val, r_val, out_t):
        bands = fbc(fbc_view(out_t), obs.y0, partition, step=t)
        quality = None
        if reference is not None:
            quality = psnr(crop(out_t.data), reference)
        trace.append(TraceRecord(t, loss_val, quality, r_val, bands.values))

    out = None
    for t in range(1, cfg.max_iters + 1):
        for p in params:
            p.zero_grad()
        out = model.forward(z)
        loss = task_loss(out, obs_fit)
        loss_val = float(loss.data)
        if not np.isfinite(loss_val):
            raise DivergenceError("non-finite loss", t, trace)
        loss.backward()
        try:
            adam_step([p.data for p in params], [p.grad for p in params], state)
        except FloatingPointError as exc:
            raise DivergenceError(str(exc), t, trace) from exc

        r_val = None
        need_r = cfg.stopping and t % cfg.stop_stride == 0
        need_trace = t % cfg.fbc_every == 0 or t == cfg.max_iters
        if need_r or need_trace:
            restored_now = crop(out.data)
            r_val = blurriness(restored_now) / max(sharpness(restored_now), SHARPNESS_FLOOR)
        if need_trace:
            record(t, loss_val, r_val, out)
        if cfg.log_every and t % cfg.log_every == 0:
            quality = f" psnr={trace[-1].psnr:.2f}dB" if trace and trace[-1].psnr else ""
            print(f"[{t}/{cfg.max_iters}] loss={loss_val:.6f}{quality}", flush=True)
        if need_r and monitor.update(r_val):
            stop_iteration = t
            stopped = True
            if not need_trace:
                record(t, loss_val, r_val, out)
            break

    if not stopped:
        stop_iteration = cfg.max_iters
    restored = np.clip(crop(out.data), 0.0, 1.0)
    return RunResult(
        restored=restored,
        stop_iteration=stop_iteration,
        trace=trace,
        wall_time=time.perf_counter() - t_start,
    )


def enhance(x0, lam, iters=5_000, seed=0, network=None):
    """Detail enhancement by unsharp masking with a learned smoother.

    A restoration run with the identity operator and a spectral-norm
    bound ``lam`` produces a smoothed version x_s of ``x0`` after a
    fixed budget of iterations; the enhanced image is
    clip(x0 + (x0 - x_s), 0, 1). Smaller ``lam`` smooths harder and
    therefore enhances more aggressively.
    """
    x0 = as_image_array(x0)
    base = network if network is not None else NetworkSpec(out_channels=x0.shape[1])
    spec = replace(base, lipschitz_lambda=lam)
    cfg = RunConfig(
        network=spec, max_iters=iters, stopping=False, fbc_every=max(1, iters // 50), seed=seed
    )
    result = restore(DegradedObservation(x0, "identity"), cfg)
    x_s = result.restored
    return np.clip(2.0 * x0 - x_s, 0.0, 1.0)
