"""Differentiable layer primitives over :class:`~resgene.autodiff.Tensor`.

Convolution is the cross-correlation convention (no kernel flip) and is
evaluated as one im2col matrix product per call so BLAS carries the heavy
lifting; its backward replays the same matrices.  All ops preserve the
input dtype, so graphs run in float32 for training speed or float64 for
gradient checks.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphError
from .tensor import Tensor, make_op_output


def _conv_out_size(extent: int, kernel: int, stride: int, padding: int) -> int:
    return (extent + 2 * padding - kernel) // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int,
            oh: int, ow: int) -> np.ndarray:
    """Unfold padded input (N,C,Hp,Wp) to (N*oh*ow, C*kh*kw) patch rows."""
    n, c, _, _ = xp.shape
    sn, sc, sh, sw = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, c, kh, kw, oh, ow),
        strides=(sn, sc, sh, sw, sh * stride, sw * stride),
        writeable=False,
    )
    # One copy: patch-major layout so the GEMM sees contiguous rows.
    return view.transpose(0, 4, 5, 1, 2, 3).reshape(n * oh * ow, c * kh * kw)


def _col2im(dcols: np.ndarray, x_shape, kh: int, kw: int, stride: int,
            padding: int, oh: int, ow: int) -> np.ndarray:
    """Fold patch-row gradients back onto the (unpadded) input."""
    n, c, h, w = x_shape
    hp, wp = h + 2 * padding, w + 2 * padding
    dview = dcols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    dxp = np.zeros((n, c, hp, wp), dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * oh:stride,
                j:j + stride * ow:stride] += dview[:, :, i, j]
    if padding:
        return dxp[:, :, padding:padding + h, padding:padding + w].copy()
    return dxp


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of (N,Cin,H,W) with (Cout,Cin,kh,kw) kernels.

    Output spatial extents follow floor((H + 2p - k) / stride) + 1.
    Backward yields gradients for the input, the kernels, and the bias.
    """
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ValueError("conv2d expects 4-D input and weight")
    n, cin, h, w = x.data.shape
    cout, cin_w, kh, kw = weight.data.shape
    if cin != cin_w:
        raise ValueError(f"input has {cin} channels, weight expects {cin_w}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ValueError("kernel larger than padded input")
    oh = _conv_out_size(h, kh, stride, padding)
    ow = _conv_out_size(w, kw, stride, padding)

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) \
        if padding else x.data
    cols = _im2col(xp, kh, kw, stride, oh, ow)
    wmat = weight.data.reshape(cout, cin * kh * kw)
    out2 = cols @ wmat.T
    if bias is not None:
        out2 += bias.data
    out = np.ascontiguousarray(
        out2.reshape(n, oh, ow, cout).transpose(0, 3, 1, 2)
    )

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(grad):
        d2 = grad.transpose(0, 2, 3, 1).reshape(n * oh * ow, cout)
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(d2.sum(axis=0))
        if weight.requires_grad:
            weight.accumulate_grad((d2.T @ cols).reshape(weight.data.shape))
        if x.requires_grad:
            dcols = d2 @ wmat
            x.accumulate_grad(
                _col2im(dcols, x.data.shape, kh, kw, stride, padding, oh, ow)
            )

    return make_op_output(out, parents, backward)


def batchnorm2d(x: Tensor, gamma: Tensor, beta: Tensor,
                running_mean: np.ndarray | None = None,
                running_var: np.ndarray | None = None,
                training: bool = False, momentum: float = 0.1,
                eps: float = 1e-5) -> Tensor:
    """Per-channel batch normalization over (N, H, W) with affine rescale.

    Train mode normalizes by the batch statistics and, when running
    buffers are supplied, folds them in with the given momentum (the
    running variance uses the unbiased estimate).  Eval mode normalizes by
    the running buffers.  Backward implements the full batch-statistics
    chain rule.
    """
    if x.data.ndim != 4:
        raise ValueError("batchnorm2d expects (N, C, H, W) input")
    n, c, h, w = x.data.shape
    dtype = x.data.dtype
    g = gamma.data.reshape(1, c, 1, 1)
    b = beta.data.reshape(1, c, 1, 1)

    if training:
        if n < 2:
            raise ValueError("batch size must be >= 2 in train mode")
        mean = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mean.reshape(1, c, 1, 1)) * inv_std.reshape(1, c, 1, 1)
        if running_mean is not None:
            running_mean *= 1.0 - momentum
            running_mean += momentum * mean
        if running_var is not None:
            count = n * h * w
            running_var *= 1.0 - momentum
            running_var += momentum * var * (count / (count - 1))
    else:
        if running_mean is None or running_var is None:
            raise ValueError("eval mode needs running statistics")
        inv_std = (1.0 / np.sqrt(running_var + eps)).astype(dtype)
        xhat = (x.data - running_mean.reshape(1, c, 1, 1).astype(dtype)) \
            * inv_std.reshape(1, c, 1, 1)

    out = g * xhat + b

    def backward(grad):
        if gamma.requires_grad:
            gamma.accumulate_grad((grad * xhat).sum(axis=(0, 2, 3)))
        if beta.requires_grad:
            beta.accumulate_grad(grad.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            istd = inv_std.reshape(1, c, 1, 1)
            dxhat = grad * g
            if training:
                m = n * h * w
                dx = (istd / m) * (
                    m * dxhat
                    - dxhat.sum(axis=(0, 2, 3), keepdims=True)
                    - xhat * (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
                )
            else:
                dx = dxhat * istd
            x.accumulate_grad(dx)

    return make_op_output(out, (x, gamma, beta), backward)


def relu(x: Tensor) -> Tensor:
    """Element-wise max(0, x); the kink at 0 backpropagates 0."""
    mask = x.data > 0
    out = np.where(mask, x.data, x.data.dtype.type(0))

    def backward(grad):
        if x.requires_grad:
            x.accumulate_grad(grad * mask)

    return make_op_output(out, (x,), backward)


def maxpool2d(x: Tensor, kernel: int, stride: int | None = None) -> Tensor:
    """Window max over (kernel x kernel) patches; backward routes to argmax."""
    if x.data.ndim != 4:
        raise ValueError("maxpool2d expects (N, C, H, W) input")
    stride = kernel if stride is None else stride
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    n, c, h, w = x.data.shape
    if h < kernel or w < kernel:
        raise ValueError(f"pool window {kernel} larger than input {h}x{w}")
    oh = (h - kernel) // stride + 1
    ow = (w - kernel) // stride + 1
    sn, sc, sh, sw = x.data.strides
    view = np.lib.stride_tricks.as_strided(
        x.data,
        shape=(n, c, oh, ow, kernel, kernel),
        strides=(sn, sc, sh * stride, sw * stride, sh, sw),
        writeable=False,
    )
    patches = view.reshape(n, c, oh, ow, kernel * kernel)
    arg = patches.argmax(axis=4)
    out = np.take_along_axis(patches, arg[..., None], axis=4)[..., 0]

    def backward(grad):
        if not x.requires_grad:
            return
        dx = np.zeros_like(x.data)
        di, dj = np.divmod(arg, kernel)
        ni, ci, oi, oj = np.indices(arg.shape, sparse=False)
        rows = oi * stride + di
        cols = oj * stride + dj
        np.add.at(dx, (ni, ci, rows, cols), grad)
        x.accumulate_grad(dx)

    return make_op_output(np.ascontiguousarray(out), (x,), backward)


def global_avgpool(x: Tensor) -> Tensor:
    """Mean over the spatial axes: (N, C, H, W) -> (N, C)."""
    if x.data.ndim != 4:
        raise ValueError("global_avgpool expects (N, C, H, W) input")
    n, c, h, w = x.data.shape
    out = x.data.mean(axis=(2, 3))

    def backward(grad):
        if x.requires_grad:
            scale = x.data.dtype.type(1.0 / (h * w))
            x.accumulate_grad(
                np.broadcast_to((grad * scale)[:, :, None, None], x.data.shape)
            )

    return make_op_output(out, (x,), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map (N, F) @ (F, O) + (O,)."""
    if x.data.ndim != 2 or weight.data.ndim != 2:
        raise ValueError("linear expects 2-D input and weight")
    if x.data.shape[1] != weight.data.shape[0]:
        raise ValueError(
            f"input features {x.data.shape[1]} != weight rows {weight.data.shape[0]}"
        )
    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(grad):
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(grad.sum(axis=0))
        if weight.requires_grad:
            weight.accumulate_grad(x.data.T @ grad)
        if x.requires_grad:
            x.accumulate_grad(grad @ weight.data.T)

    return make_op_output(out, parents, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Element-wise sum of two same-shape tensors (residual shortcut join)."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = a.data + b.data

    def backward(grad):
        if a.requires_grad:
            a.accumulate_grad(grad)
        if b.requires_grad:
            b.accumulate_grad(grad)

    return make_op_output(out, (a, b), backward)


def dropout(x: Tensor, rate: float, training: bool = False,
            rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``rate``, scale survivors.

    Eval mode (and rate 0) is the identity, so no rescaling is ever needed
    at prediction time.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("train-mode dropout needs a random generator")
    keep = rng.random(x.data.shape) >= rate
    scale = x.data.dtype.type(1.0 / (1.0 - rate))
    mask = keep.astype(x.data.dtype) * scale
    out = x.data * mask

    def backward(grad):
        if x.requires_grad:
            x.accumulate_grad(grad * mask)

    return make_op_output(out, (x,), backward)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error between two equal-length vectors (scalar output)."""
    p = pred.data.ravel()
    t = target.data.ravel()
    if p.size == 0:
        raise ValueError("mse_loss on empty input")
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} vs {t.size}")
    diff = p - t
    out = np.asarray((diff @ diff) / p.size, dtype=pred.data.dtype)

    def backward(grad):
        g = grad * 2.0 / p.size
        if pred.requires_grad:
            pred.accumulate_grad((g * diff).reshape(pred.data.shape))
        if target.requires_grad:
            target.accumulate_grad((-g * diff).reshape(target.data.shape))

    return make_op_output(out, (pred, target), backward)


def reshape(x: Tensor, shape) -> Tensor:
    """View the same data under a new shape."""
    out = x.data.reshape(shape)

    def backward(grad):
        if x.requires_grad:
            x.accumulate_grad(grad.reshape(x.data.shape))

    return make_op_output(out, (x,), backward)


__all__ = [
    "conv2d", "batchnorm2d", "relu", "maxpool2d", "global_avgpool",
    "linear", "add", "dropout", "mse_loss", "reshape",
]
