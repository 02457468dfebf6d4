"""Untrained generator architectures.

Three spatial layouts share the same building block of (optional
upsampling ->) 3x3 convolution -> Lipschitz normalization -> leaky ReLU:

* ``decoder``: the default. Starts from a small noise tensor and grows
  it by a factor-2 upsampling per stage, five stages by default.
* ``encoder-decoder``: prepends a strided-convolution encoder (two
  convolutions per stage, the first with stride 2) operating on a
  full-resolution noise input.
* ``convnet``: the decoder without its upsampling layers; the noise
  input already has the target resolution.

Every architecture ends in a 1x1 convolution to the output channel
count followed by logistic squashing, so forward passes always produce
values in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff.optim import he_init
from .autodiff.tensor import Tensor, conv2d, fixed_filter_conv, leaky_relu, sigmoid, zero_insert
from .layers import (
    GaussianUpsampleConfig,
    LipschitzNormConfig,
    bilinear_kernel,
    gaussian_kernel,
    gaussian_upsample,
    lipschitz_normalize,
    nearest_kernel,
)

__all__ = ["NetworkSpec", "Model", "build_network"]

ARCHITECTURES = ("decoder", "encoder-decoder", "convnet")
UPSAMPLE_MODES = ("gaussian", "bilinear", "nearest")
LEAKY_SLOPE = 0.01


@dataclass
class NetworkSpec:
    """Declarative description of a generator.

    ``lipschitz_lambda`` of None leaves the spectral norm unbounded
    (plain convolution + mean centering + bias, the control setting).
    ``upsample_sigma`` only applies to the ``gaussian`` mode.
    """

    architecture: str = "decoder"
    channels: int = 128
    stages: int = 5
    upsample: str = "gaussian"
    upsample_sigma: float = 0.5
    upsample_kernel_size: int = 5
    lipschitz_lambda: float | None = 2.0
    input_depth: int = 32
    out_channels: int = 3

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.upsample not in UPSAMPLE_MODES:
            raise ValueError(f"unknown upsample mode {self.upsample!r}")
        if self.stages < 1 or self.channels < 1 or self.input_depth < 1:
            raise ValueError("stages, channels and input_depth must be positive")
        if self.out_channels not in (1, 3):
            raise ValueError("out_channels must be 1 or 3")


class _ConvUnit:
    """conv 3x3 -> Lipschitz normalization -> leaky ReLU."""

    def __init__(self, in_channels, out_channels, stride, lam, rng):
        self.weight = he_init((out_channels, in_channels, 3, 3), rng)
        self.norm = LipschitzNormConfig.create(out_channels, lam, rng)
        self.stride = stride

    def __call__(self, x):
        pre = conv2d(x, self.weight, stride=self.stride, padding=1)
        return leaky_relu(lipschitz_normalize(pre, self.weight, self.norm), LEAKY_SLOPE)

    def parameters(self):
        return [self.weight, self.norm.bias]


class _Upsample:
    """Factor-2 expansion with the configured interpolating filter."""

    def __init__(self, spec):
        self.mode = spec.upsample
        if self.mode == "gaussian":
            self.cfg = GaussianUpsampleConfig(
                s=2, sigma=spec.upsample_sigma, kernel_size=spec.upsample_kernel_size
            )
            self.kernel = None
        elif self.mode == "bilinear":
            self.kernel = bilinear_kernel(2)
        else:
            self.kernel = nearest_kernel(2)

    def __call__(self, x):
        if self.mode == "gaussian":
            return gaussian_upsample(x, self.cfg)
        return fixed_filter_conv(zero_insert(x, 2), self.kernel)


class Model:
    """An instantiated generator: parameters plus the forward graph."""

    def __init__(self, spec, target_hw, rng):
        spec.validate()
        h, w = target_hw
        factor = 2**spec.stages
        if spec.architecture in ("decoder", "encoder-decoder") and (h % factor or w % factor):
            raise ValueError(
                f"target sides {h}x{w} must be divisible by 2^stages = {factor}; "
                "reflect-pad the image first"
            )
        self.spec = spec
        self.target_hw = (h, w)
        lam = spec.lipschitz_lambda

        self._stages = []
        in_c = spec.input_depth
        if spec.architecture == "encoder-decoder":
            for _ in range(spec.stages):
                down = _ConvUnit(in_c, spec.channels, 2, lam, rng)
                keep = _ConvUnit(spec.channels, spec.channels, 1, lam, rng)
                self._stages.append(("encode", (down, keep)))
                in_c = spec.channels
        if spec.architecture in ("decoder", "encoder-decoder"):
            for _ in range(spec.stages):
                up = _Upsample(spec)
                unit = _ConvUnit(in_c, spec.channels, 1, lam, rng)
                self._stages.append(("decode", (up, unit)))
                in_c = spec.channels
        else:
            for _ in range(spec.stages):
                unit = _ConvUnit(in_c, spec.channels, 1, lam, rng)
                self._stages.append(("conv", (unit,)))
                in_c = spec.channels

        self.head_weight = he_init((spec.out_channels, in_c, 1, 1), rng)
        self.head_bias = Tensor(np.zeros(spec.out_channels, dtype=np.float32), requires_grad=True)

    @property
    def input_shape(self):
        """Shape of the noise input z, (1, depth, h, w)."""
        h, w = self.target_hw
        if self.spec.architecture == "decoder":
            factor = 2**self.spec.stages
            return (1, self.spec.input_depth, h // factor, w // factor)
        return (1, self.spec.input_depth, h, w)

    def sample_input(self, rng, dtype=np.float32):
        """Uniform noise in [0, 0.1) with the architecture's input shape."""
        return Tensor(rng.uniform(0.0, 0.1, size=self.input_shape).astype(dtype))

    def parameters(self):
        params = []
        for _, parts in self._stages:
            for part in parts:
                if isinstance(part, _ConvUnit):
                    params.extend(part.parameters())
        params.append(self.head_weight)
        params.append(self.head_bias)
        return params

    def forward(self, z):
        if tuple(z.data.shape) != self.input_shape:
            raise ValueError(f"input shape {z.data.shape} != expected {self.input_shape}")
        x = z
        for kind, parts in self._stages:
            if kind == "encode":
                down, keep = parts
                x = keep(down(x))
            elif kind == "decode":
                up, unit = parts
                x = unit(up(x))
            else:
                (unit,) = parts
                x = unit(x)
        out = conv2d(x, self.head_weight, self.head_bias, stride=1, padding=0)
        return sigmoid(out)

    __call__ = forward


def build_network(spec, target_hw, rng):
    """Instantiate ``spec`` for a target image size.

    All parameters, the per-layer power-iteration vectors and nothing
    else are drawn from ``rng``, in a fixed order, so one seed fixes
    the whole model.
    """
    return Model(spec, target_hw, rng)
