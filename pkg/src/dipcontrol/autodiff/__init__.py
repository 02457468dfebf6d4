"""Minimal reverse-mode tensor engine for single-image generators."""

from .optim import AdamState, adam_step, he_init, make_rng
from .spectral import fft2_magnitude, power_iteration_sn
from .tensor import (
    Tensor,
    conv2d,
    fixed_filter_conv,
    leaky_relu,
    sigmoid,
    zero_insert,
)

__all__ = [
    "AdamState",
    "Tensor",
    "adam_step",
    "conv2d",
    "fft2_magnitude",
    "fixed_filter_conv",
    "he_init",
    "leaky_relu",
    "make_rng",
    "power_iteration_sn",
    "sigmoid",
    "zero_insert",
]
