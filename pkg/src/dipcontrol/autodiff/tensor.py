"""Rank-4 tensors with reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array (by convention ``(batch, channels,
height, width)`` for images) and records enough of the compute graph to
backpropagate through the fixed set of operations an untrained image
generator needs: dense convolution, fixed-filter (depthwise) convolution
with reflect padding, zero-insertion upsampling, leaky ReLU, logistic
squashing, broadcast arithmetic and reductions.

The graph is a plain DAG of closures: each operation stores its parents
and a backward function, and :meth:`Tensor.backward` replays them in
reverse topological order. Dense convolutions are lowered to BLAS matrix
products, fixed-filter stencils run through ``scipy.ndimage``; everything
stays deterministic for a fixed input.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

__all__ = [
    "Tensor",
    "conv2d",
    "fixed_filter_conv",
    "leaky_relu",
    "sigmoid",
    "zero_insert",
]


class Tensor:
    """A dense array plus an optional gradient.

    Parameters
    ----------
    data : array_like
        Values; converted to a floating numpy array. float32 is the
        working precision for optimization, float64 is used by the
        numerical test suites.
    requires_grad : bool
        Mark this tensor as a differentiable leaf (a parameter).
    dtype : numpy dtype, optional
        Override the storage dtype.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def item(self):
        return float(self.data)

    def detach(self):
        """Return a view of the values outside the graph."""
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, gradient=None):
        """Backpropagate from this node.

        Without an explicit ``gradient`` the seed is all ones, which for
        the scalar losses used here is the usual dL/dL = 1.
        """
        if gradient is None:
            gradient = np.ones_like(self.data)
        self.grad = np.asarray(gradient, dtype=self.data.dtype)

        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Arithmetic sugar. Non-Tensor operands are treated as constants.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, _neg_const(other)) if not isinstance(other, Tensor) else add(self, mul(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return mul(self, 1.0 / float(scalar))

    def __neg__(self):
        return mul(self, -1.0)

    def sum(self):
        return _sum(self)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)


def _neg_const(c):
    return -np.asarray(c) if not np.isscalar(c) else -c


def _node(data, parents, backward):
    # requires_grad marks every node on a path to a differentiable leaf.
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b):
    if not isinstance(b, Tensor):
        return _node(a.data + b, (a,), lambda g: _accum(a, _unbroadcast(g, a.data.shape)))
    out_data = a.data + b.data

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(out_data, (a, b), backward)


def mul(a, b):
    if not isinstance(b, Tensor):
        const = b

        def backward_const(g):
            _accum(a, _unbroadcast(g * const, a.data.shape))

        return _node(a.data * const, (a,), backward_const)

    out_data = a.data * b.data

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(out_data, (a, b), backward)


def _sum(a):
    def backward(g):
        _accum(a, np.broadcast_to(g, a.data.shape).astype(a.data.dtype, copy=False))

    return _node(a.data.sum(), (a,), backward)


def mean(a, axis=None, keepdims=False):
    out_data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else np.prod([a.data.shape[i] for i in np.atleast_1d(axis)])

    def backward(g):
        gg = np.asarray(g)
        if not keepdims and axis is not None:
            gg = np.expand_dims(gg, tuple(np.atleast_1d(axis)))
        _accum(a, (np.broadcast_to(gg, a.data.shape) / count).astype(a.data.dtype, copy=False))

    return _node(out_data, (a,), backward)


def leaky_relu(x, negative_slope=0.01):
    """Elementwise max(v, slope*v). The subgradient at 0 is the slope."""
    slope = x.data.dtype.type(negative_slope)
    out_data = np.maximum(x.data, x.data * slope)

    def backward(g):
        factor = np.where(x.data > 0, x.data.dtype.type(1), slope)
        _accum(x, g * factor)

    return _node(out_data, (x,), backward)


def sigmoid(x):
    """Logistic squashing to (0, 1)."""
    with np.errstate(over="ignore"):
        out_data = 1.0 / (1.0 + np.exp(-x.data))
    out_data = out_data.astype(x.data.dtype, copy=False)

    def backward(g):
        _accum(x, g * out_data * (1.0 - out_data))

    return _node(out_data, (x,), backward)


def zero_insert(x, factor):
    """Bed-of-nails expansion: place pixels on a stride-``factor`` grid.

    Output is ``factor`` times larger per spatial side; inserted
    positions are exactly zero. Gradient is the matching subsample.
    """
    if factor < 1 or int(factor) != factor:
        raise ValueError(f"upsampling factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return x
    b, c, h, w = x.data.shape
    out_data = np.zeros((b, c, h * factor, w * factor), dtype=x.data.dtype)
    out_data[:, :, ::factor, ::factor] = x.data

    def backward(g):
        _accum(x, g[:, :, ::factor, ::factor])

    return _node(out_data, (x,), backward)


# ---------------------------------------------------------------------------
# Dense convolution (zero padding), lowered to a BLAS matmul.
# ---------------------------------------------------------------------------


def conv2d(x, weight, bias=None, stride=1, padding=0):
    """2D cross-correlation of ``x`` with a learnable kernel bank.

    Parameters
    ----------
    x : Tensor
        Input of shape (B, Cin, H, W).
    weight : Tensor
        Kernels of shape (Cout, Cin, kH, kW); kH and kW must be odd.
    bias : Tensor or None
        Optional per-output-channel bias of shape (Cout,).
    stride, padding : int
        Spatial stride and symmetric zero padding.

    Returns
    -------
    Tensor
        Shape (B, Cout, oH, oW) with oH = floor((H + 2p - kH)/stride) + 1.
    """
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ValueError("conv2d expects rank-4 input and weight")
    b, cin, h, w = x.data.shape
    cout, cin_w, kh, kw = weight.data.shape
    if cin != cin_w:
        raise ValueError(f"input has {cin} channels but weight expects {cin_w}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel sides must be odd, got {kh}x{kw}")
    if stride < 1 or padding < 0:
        raise ValueError("stride must be >= 1 and padding >= 0")
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    if oh <= 0 or ow <= 0:
        raise ValueError(
            f"convolution output would be {oh}x{ow} for input {h}x{w}, "
            f"kernel {kh}x{kw}, stride {stride}, padding {padding}"
        )

    if padding:
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    else:
        xp = x.data

    if stride == 1:
        return _conv2d_unit_stride(x, weight, bias, padding, xp, oh, ow)
    return _conv2d_strided(x, weight, bias, stride, padding, xp, oh, ow)


def _conv2d_unit_stride(x, weight, bias, padding, xp, oh, ow):
    """Stride-1 convolution as one GEMM per kernel tap on lda views.

    Each tap multiplies a strided view of the padded input whose rows
    have unit column stride, which numpy's matmul hands to BLAS without
    copying; the tap results accumulate over a row-padded buffer whose
    wrap-around columns are cropped afterwards. This avoids the im2col
    materialization entirely.
    """
    b, cin, h, w = x.data.shape
    cout, _, kh, kw = weight.data.shape
    hp, wp = xp.shape[2], xp.shape[3]
    xflat = xp.reshape(b, cin, hp * wp)
    span = oh * wp - (kw - 1)
    w_taps = np.ascontiguousarray(weight.data.transpose(2, 3, 0, 1))  # (kh,kw,Cout,Cin)

    out_wide = np.zeros((b, cout, oh * wp), dtype=xp.dtype)
    acc = out_wide[:, :, :span]
    scratch = np.empty_like(acc)
    for i in range(kh):
        for j in range(kw):
            np.matmul(w_taps[i, j], xflat[:, :, i * wp + j : i * wp + j + span], out=scratch)
            acc += scratch
    out_data = np.ascontiguousarray(out_wide.reshape(b, cout, oh, wp)[:, :, :, :ow])
    if bias is not None:
        out_data += bias.data.reshape(1, cout, 1, 1)

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        # Gradient in the row-padded layout, zero over the wrap columns.
        g_wide = np.zeros((b, cout, oh * wp), dtype=g.dtype)
        g_wide.reshape(b, cout, oh, wp)[:, :, :, :ow] = g
        gv = g_wide[:, :, :span]
        if weight.requires_grad:
            gw = np.empty((kh, kw, cout, cin), dtype=weight.data.dtype)
            for i in range(kh):
                for j in range(kw):
                    xv = xflat[:, :, i * wp + j : i * wp + j + span]
                    gw[i, j] = np.matmul(gv, xv.transpose(0, 2, 1)).sum(axis=0)
            _accum(weight, np.ascontiguousarray(gw.transpose(2, 3, 0, 1)))
        if x.requires_grad:
            wt_taps = np.ascontiguousarray(w_taps.transpose(0, 1, 3, 2))  # (kh,kw,Cin,Cout)
            gxp_flat = np.zeros((b, cin, hp * wp), dtype=xp.dtype)
            dscratch = np.empty((b, cin, span), dtype=xp.dtype)
            for i in range(kh):
                for j in range(kw):
                    np.matmul(wt_taps[i, j], gv, out=dscratch)
                    gxp_flat[:, :, i * wp + j : i * wp + j + span] += dscratch
            gxp = gxp_flat.reshape(b, cin, hp, wp)
            if padding:
                gx = np.ascontiguousarray(gxp[:, :, padding : padding + h, padding : padding + w])
            else:
                gx = gxp
            _accum(x, gx)
        if bias is not None:
            _accum(bias, g.sum(axis=(0, 2, 3)))

    return _node(out_data, parents, backward)


def _conv2d_strided(x, weight, bias, stride, padding, xp, oh, ow):
    """General strided convolution via im2col plus one GEMM."""
    b, cin, h, w = x.data.shape
    cout, _, kh, kw = weight.data.shape
    xp_h, xp_w = xp.shape[2], xp.shape[3]
    cols2 = _im2col(xp, kh, kw, stride, oh, ow)
    wmat = weight.data.reshape(cout, cin * kh * kw)
    out_data = np.matmul(wmat, cols2).reshape(b, cout, oh, ow)
    if bias is not None:
        out_data += bias.data.reshape(1, cout, 1, 1)

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g_flat = np.ascontiguousarray(g).reshape(b, cout, oh * ow)
        if weight.requires_grad:
            gw = np.matmul(g_flat, cols2.transpose(0, 2, 1)).sum(axis=0)
            _accum(weight, gw.reshape(cout, cin, kh, kw))
        if x.requires_grad:
            # Transposed convolution: zero-stuff the gradient over the
            # stride grid and correlate with the flipped, channel-swapped
            # kernel.
            gz = np.zeros((b, cout, (oh - 1) * stride + 1, (ow - 1) * stride + 1), dtype=g.dtype)
            gz[:, :, ::stride, ::stride] = g
            gp = np.pad(gz, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
            wflip = np.ascontiguousarray(weight.data.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
            fh = gz.shape[2] + kh - 1
            fw = gz.shape[3] + kw - 1
            gcols = _im2col(gp, kh, kw, 1, fh, fw)
            gfull = np.matmul(wflip.reshape(cin, cout * kh * kw), gcols).reshape(b, cin, fh, fw)
            if fh != xp_h or fw != xp_w:  # input columns the stride never reached
                gxp = np.zeros_like(xp)
                gxp[:, :, :fh, :fw] = gfull
            else:
                gxp = gfull
            if padding:
                gx = np.ascontiguousarray(gxp[:, :, padding : padding + h, padding : padding + w])
            else:
                gx = gxp
            _accum(x, gx)
        if bias is not None:
            _accum(bias, g.sum(axis=(0, 2, 3)))

    return _node(out_data, parents, backward)


def _im2col(xp, kh, kw, stride, oh, ow):
    """(B, Cin*kh*kw, oH*oW) column buffer, contiguous for BLAS."""
    b, cin = xp.shape[0], xp.shape[1]
    cols = np.empty((b, cin, kh * kw, oh * ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            tap = xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
            cols[:, :, i * kw + j, :] = tap.reshape(b, cin, oh * ow)
    return cols.reshape(b, cin * kh * kw, oh * ow)


# ---------------------------------------------------------------------------
# Fixed (non-learnable) depthwise filtering with reflect padding.
# ---------------------------------------------------------------------------


def _reflect_indices(n, pad):
    # Source row for every padded position; the edge sample is not repeated.
    return np.pad(np.arange(n), pad, mode="reflect")


def _split_separable(filt):
    """Return (v, h) with filt == outer(v, h), or None if not rank one."""
    u, s, vt = np.linalg.svd(filt.astype(np.float64))
    if s[0] == 0.0:
        return np.zeros(filt.shape[0]), np.zeros(filt.shape[1])
    if len(s) > 1 and s[1] > 1e-12 * s[0]:
        return None
    r = np.sqrt(s[0])
    return u[:, 0] * r, vt[0] * r


def _corr_mirror(x, filt, separable):
    """Same-size correlation with mirror boundaries (edge not repeated)."""
    out = np.empty_like(x)
    if separable is not None:
        v, htaps = separable
        ndimage.correlate1d(x, htaps.astype(x.dtype), axis=3, output=out, mode="mirror")
        ndimage.correlate1d(out, v.astype(x.dtype), axis=2, output=out, mode="mirror")
    else:
        ndimage.correlate(x, filt.astype(x.dtype)[None, None], output=out, mode="mirror")
    return out


def _corr_zero(x, filt, separable):
    """Same-size correlation with zero boundaries."""
    out = np.empty_like(x)
    if separable is not None:
        v, htaps = separable
        ndimage.correlate1d(x, htaps.astype(x.dtype), axis=3, output=out, mode="constant")
        ndimage.correlate1d(out, v.astype(x.dtype), axis=2, output=out, mode="constant")
    else:
        ndimage.correlate(x, filt.astype(x.dtype)[None, None], output=out, mode="constant")
    return out


def fixed_filter_conv(x, filt, stride=1):
    """Depthwise correlation with a constant 2D filter, reflect padded.

    Every channel is filtered with the same kernel; the kernel is not a
    parameter, so the gradient flows to the input only. Used for the
    interpolating filters of the upsampling layers and for the Lanczos
    antialiasing filter of the downsampling operator.

    Rank-one kernels (Gaussian, Lanczos, tent, box) are applied as two
    1D passes; the result is identical up to float rounding.
    """
    filt = np.asarray(filt)
    if filt.ndim != 2:
        raise ValueError("filter must be a 2D kernel")
    kh, kw = filt.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"filter sides must be odd, got {kh}x{kw}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    b, c, h, w = x.data.shape
    ph, pw = kh // 2, kw // 2

    separable = _split_separable(filt)
    full = _corr_mirror(x.data, filt, separable)
    out_data = np.ascontiguousarray(full[:, :, ::stride, ::stride]) if stride > 1 else full

    flipped = filt[::-1, ::-1]
    flipped_sep = None if separable is None else (separable[0][::-1], separable[1][::-1])

    def backward(g):
        # Adjoint chain: zero-stuff the subsampled gradient, apply the
        # adjoint of the valid correlation (zero-boundary correlation of
        # the p-padded gradient with the flipped kernel), then fold the
        # virtual mirror-pad rows and columns back into the interior.
        if stride > 1:
            gz = np.zeros((b, c, h, w), dtype=g.dtype)
            gz[:, :, ::stride, ::stride] = g
        else:
            gz = g
        gzp = np.pad(gz, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        gfull = _corr_zero(gzp, flipped, flipped_sep)

        hp, wp = h + 2 * ph, w + 2 * pw
        idx_r = _reflect_indices(h, ph)
        idx_c = _reflect_indices(w, pw)
        tmp = gfull[:, :, ph : ph + h, :].copy()
        for r in range(ph):
            tmp[:, :, idx_r[r], :] += gfull[:, :, r, :]
            tmp[:, :, idx_r[hp - 1 - r], :] += gfull[:, :, hp - 1 - r, :]
        gx = tmp[:, :, :, pw : pw + w].copy()
        for s in range(pw):
            gx[:, :, :, idx_c[s]] += tmp[:, :, :, s]
            gx[:, :, :, idx_c[wp - 1 - s]] += tmp[:, :, :, wp - 1 - s]
        _accum(x, gx)

    return _node(out_data, (x,), backward)
