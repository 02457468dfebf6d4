"""Adam optimizer, He weight initialization, and seeded randomness.

All randomness in the library flows through ``numpy.random.Generator``
instances seeded with PCG64, so a fixed seed reproduces parameter
initialization, network inputs, noise fields and masks bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

__all__ = ["AdamState", "adam_step", "he_init", "make_rng"]


def make_rng(seed):
    """Deterministic generator (PCG64) for the given 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def he_init(shape, rng, dtype=np.float32):
    """Sample a convolution weight from N(0, 2 / fan_in).

    ``fan_in`` is ``in_channels * kernel_h * kernel_w`` for the usual
    (out_channels, in_channels, kH, kW) weight layout.
    """
    if len(shape) != 4:
        raise ValueError(f"expected a rank-4 convolution weight shape, got {shape}")
    fan_in = int(np.prod(shape[1:]))
    std = np.sqrt(2.0 / fan_in)
    data = rng.normal(0.0, std, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True)


@dataclass
class AdamState:
    """First/second moment accumulators for a list of parameters."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        state = cls(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
        return state


def adam_step(params, grads, state):
    """One bias-corrected Adam update, applied to ``params`` in place.

    Parameters
    ----------
    params : list of ndarray
        Parameter arrays, modified in place.
    grads : list of ndarray
        Gradients, same shapes as ``params``.
    state : AdamState
        Moment accumulators; ``state.step_count`` is incremented.

    Raises
    ------
    FloatingPointError
        If any gradient contains NaN; the optimization run must abort
        rather than silently poison the moments.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads must have the same length")
    for i, g in enumerate(grads):
        if np.isnan(g).any():
            raise FloatingPointError(
                f"NaN gradient for parameter {i} at step {state.step_count + 1}"
            )
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state
