"""Dense-tensor kernels with hand-written adjoints.

Volumes are (C, L, X, Y) arrays: channels, temporal length, height, width.
Convolution kernels are (N, C, T, H, W): output channels first. All kernels
are pure functions; dtype follows the inputs (float64 for gradient checking,
float32 acceptable for throughput).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError


def _triple(v):
    if np.isscalar(v):
        return (int(v),) * 3
    t = tuple(int(x) for x in v)
    if len(t) != 3:
        raise ShapeError(f"expected a scalar or 3-tuple, got {v!r}")
    return t


@dataclass(frozen=True)
class ConvSpec:
    kernel_shape: tuple[int, int, int, int, int]  # (N, C, T, H, W)
    stride: tuple[int, int, int] = (1, 1, 1)
    padding: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if any(k < 1 for k in self.kernel_shape) or any(s < 1 for s in self.stride):
            raise ShapeError("kernel dims and strides must be >= 1")
        if any(p < 0 for p in self.padding):
            raise ShapeError("padding must be >= 0")


def conv_output_dims(in_dims, kernel_dims, stride, padding):
    out = tuple(
        (i + 2 * p - k) // s + 1
        for i, k, s, p in zip(in_dims, kernel_dims, stride, padding)
    )
    if any(o < 1 for o in out):
        raise ShapeError(
            f"kernel {kernel_dims} with stride {stride}, padding {padding} "
            f"produces empty output on input {in_dims}"
        )
    return out


def _im2col(volume, kernel_dims, stride, padding, out_dims):
    """Patch matrix of shape (C*T*H*W, L'*X'*Y'), contiguous."""
    c = volume.shape[0]
    t, h, w = kernel_dims
    st, sh, sw = stride
    pt, ph, pw = padding
    lo, xo, yo = out_dims
    if any(padding):
        vp = np.pad(volume, ((0, 0), (pt, pt), (ph, ph), (pw, pw)))
    else:
        vp = volume
    cols = np.empty((c, t, h, w, lo, xo, yo), dtype=volume.dtype)
    for dt in range(t):
        for dh in range(h):
            for dw in range(w):
                cols[:, dt, dh, dw] = vp[
                    :,
                    dt : dt + st * lo : st,
                    dh : dh + sh * xo : sh,
                    dw : dw + sw * yo : sw,
                ]
    return cols.reshape(c * t * h * w, lo * xo * yo)


def _col2im(cols, in_shape, kernel_dims, stride, padding, out_dims):
    """Adjoint of _im2col: scatter-add patches back into a volume."""
    c, li, xi, yi = in_shape
    t, h, w = kernel_dims
    st, sh, sw = stride
    pt, ph, pw = padding
    lo, xo, yo = out_dims
    grid = cols.reshape(c, t, h, w, lo, xo, yo)
    vp = np.zeros((c, li + 2 * pt, xi + 2 * ph, yi + 2 * pw), dtype=cols.dtype)
    for dt in range(t):
        for dh in range(h):
            for dw in range(w):
                vp[
                    :,
                    dt : dt + st * lo : st,
                    dh : dh + sh * xo : sh,
                    dw : dw + sw * yo : sw,
                ] += grid[:, dt, dh, dw]
    if any(padding):
        return vp[:, pt : pt + li, ph : ph + xi, pw : pw + yi]
    return vp


def _check_conv_args(volume, kernels, bias):
    if volume.ndim != 4 or kernels.ndim != 5:
        raise ShapeError("conv3d expects a (C,L,X,Y) volume and (N,C,T,H,W) kernels")
    if volume.shape[0] != kernels.shape[1]:
        raise ShapeError(
            f"channel mismatch: volume has {volume.shape[0]}, kernels expect {kernels.shape[1]}"
        )
    if bias.shape != (kernels.shape[0],):
        raise ShapeError("bias must have one entry per output channel")


def conv3d(volume, kernels, bias, stride=(1, 1, 1), padding=(0, 0, 0)):
    """Cross-correlation of a volume with a bank of 3-D kernels (zero padded).

    Each output cell is the quadruple sum over (c, t, h, w) of
    volume[c, l*sT - pT + t, x*sH - pH + h, y*sW - pW + w] * kernels[n, c, t, h, w]
    plus bias[n]; out-of-bounds input cells count as zero.
    """
    stride, padding = _triple(stride), _triple(padding)
    _check_conv_args(volume, kernels, bias)
    n = kernels.shape[0]
    kd = kernels.shape[2:]
    out_dims = conv_output_dims(volume.shape[1:], kd, stride, padding)
    cols = _im2col(volume, kd, stride, padding, out_dims)
    out = kernels.reshape(n, -1) @ cols
    out += bias[:, None]
    return out.reshape(n, *out_dims)


def conv3d_reference(volume, kernels, bias, stride=(1, 1, 1), padding=(0, 0, 0)):
    """Naive quadruple-loop convolution; the correctness oracle for conv3d."""
    stride, padding = _triple(stride), _triple(padding)
    _check_conv_args(volume, kernels, bias)
    n, c, t, h, w = kernels.shape
    st, sh, sw = stride
    pt, ph, pw = padding
    lo, xo, yo = conv_output_dims(volume.shape[1:], (t, h, w), stride, padding)
    li, xi, yi = volume.shape[1:]
    out = np.zeros((n, lo, xo, yo), dtype=volume.dtype)
    for f in range(n):
        for l in range(lo):
            for x in range(xo):
                for y in range(yo):
                    acc = 0.0
                    for ci in range(c):
                        for dt in range(t):
                            for dh in range(h):
                                for dw in range(w):
                                    il = l * st - pt + dt
                                    ix = x * sh - ph + dh
                                    iy = y * sw - pw + dw
                                    if 0 <= il < li and 0 <= ix < xi and 0 <= iy < yi:
                                        acc += volume[ci, il, ix, iy] * kernels[f, ci, dt, dh, dw]
                    out[f, l, x, y] = acc + bias[f]
    return out


def conv3d_backward(
    grad_out, volume, kernels, stride=(1, 1, 1), padding=(0, 0, 0), need_input_grad=True
):
    """Gradients of sum(grad_out * conv3d(...)) w.r.t. volume, kernels, bias.

    grad_volume is None when need_input_grad is False (first-layer shortcut).
    """
    stride, padding = _triple(stride), _triple(padding)
    _check_conv_args(volume, kernels, bias=np.zeros(kernels.shape[0], dtype=volume.dtype))
    n = kernels.shape[0]
    kd = kernels.shape[2:]
    out_dims = conv_output_dims(volume.shape[1:], kd, stride, padding)
    if grad_out.shape != (n, *out_dims):
        raise ShapeError(f"grad_out shape {grad_out.shape} != {(n, *out_dims)}")
    grad_flat = grad_out.reshape(n, -1)
    cols = _im2col(volume, kd, stride, padding, out_dims)
    grad_kernels = (grad_flat @ cols.T).reshape(kernels.shape)
    grad_bias = grad_flat.sum(axis=1)
    if not need_input_grad:
        return None, grad_kernels, grad_bias
    grad_cols = kernels.reshape(n, -1).T @ grad_flat
    grad_volume = _col2im(grad_cols, volume.shape, kd, stride, padding, out_dims)
    return grad_volume, grad_kernels, grad_bias


def maxpool3d(volume, size, stride=None):
    """Max over (kT,kH,kW) windows; also returns per-output flat argmax indices.

    Ties break to the lowest flat input index. The indices feed the backward
    pass, which routes gradient only to the argmax cells.
    """
    size = _triple(size)
    stride = size if stride is None else _triple(stride)
    if volume.ndim != 4:
        raise ShapeError("maxpool3d expects a (C,L,X,Y) volume")
    if any(k > d for k, d in zip(size, volume.shape[1:])):
        raise ShapeError(f"pool window {size} larger than input {volume.shape[1:]}")
    out_dims = conv_output_dims(volume.shape[1:], size, stride, (0, 0, 0))
    c = volume.shape[0]
    lo, xo, yo = out_dims
    kt, kh, kw = size
    st, sh, sw = stride
    windows = np.empty((c, lo, xo, yo, kt * kh * kw), dtype=volume.dtype)
    offsets = []
    i = 0
    for dt in range(kt):
        for dh in range(kh):
            for dw in range(kw):
                windows[..., i] = volume[
                    :, dt : dt + st * lo : st, dh : dh + sh * xo : sh, dw : dw + sw * yo : sw
                ]
                offsets.append((dt, dh, dw))
                i += 1
    which = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, which[..., None], axis=-1)[..., 0]
    off = np.asarray(offsets)
    li, xi, yi = volume.shape[1:]
    base_l = np.arange(lo)[:, None, None] * st
    base_x = np.arange(xo)[None, :, None] * sh
    base_y = np.arange(yo)[None, None, :] * sw
    il = base_l + off[which, 0]
    ix = base_x + off[which, 1]
    iy = base_y + off[which, 2]
    ic = np.arange(c)[:, None, None, None]
    argmax_flat = ((ic * li + il) * xi + ix) * yi + iy
    return out, argmax_flat


def maxpool3d_backward(grad_out, argmax_flat, input_shape, size, stride=None):
    """Scatter grad_out to the argmax positions of the forward pass."""
    size = _triple(size)
    stride = size if stride is None else _triple(stride)
    grad_in = np.zeros(int(np.prod(input_shape)), dtype=grad_out.dtype)
    if all(s >= k for s, k in zip(stride, size)):
        # non-overlapping windows: each input cell receives at most one grad
        grad_in[argmax_flat.ravel()] = grad_out.ravel()
    else:
        np.add.at(grad_in, argmax_flat.ravel(), grad_out.ravel())
    return grad_in.reshape(input_shape)


def linear(x, weights, bias):
    """Affine map y = Wx + b."""
    if weights.ndim != 2 or x.shape != (weights.shape[1],) or bias.shape != (weights.shape[0],):
        raise ShapeError(
            f"linear: incompatible shapes x{x.shape} W{weights.shape} b{bias.shape}"
        )
    return weights @ x + bias


def linear_backward(grad_out, x, weights):
    grad_x = weights.T @ grad_out
    grad_w = np.outer(grad_out, x)
    return grad_x, grad_w, grad_out.copy()


def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    return grad_out * (x > 0)


def softmax(x):
    """Stable softmax via max subtraction; output sums to 1."""
    shifted = x - x.max()
    e = np.exp(shifted)
    return e / e.sum()


def cross_entropy(probs, label):
    """-log(probs[label])."""
    if not 0 <= label < len(probs):
        raise DomainError(f"label {label} outside {len(probs)} classes")
    return float(-np.log(probs[label]))


def softmax_cross_entropy(logits, label):
    """Fused loss; returns (loss, probs). Gradient of loss w.r.t. logits is
    probs - onehot(label)."""
    if not 0 <= label < len(logits):
        raise DomainError(f"label {label} outside {len(logits)} classes")
    probs = softmax(logits)
    shifted = logits - logits.max()
    loss = float(np.log(np.exp(shifted).sum()) - shifted[label])
    return loss, probs


def grad_check(f, x, analytic_grad, eps=1e-5, max_coords=200, rng=None):
    """Max relative error between analytic_grad and central differences of f.

    For tensors larger than max_coords a seeded random subset of coordinates
    is probed. f must be scalar-valued; double precision inputs expected.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(analytic_grad, dtype=np.float64)
    if x.shape != g.shape:
        raise ShapeError("gradient shape must match the point")
    size = x.size
    if size <= max_coords:
        coords = np.arange(size)
    else:
        rng = rng or np.random.default_rng(0)
        coords = rng.choice(size, size=max_coords, replace=False)
    worst = 0.0
    flat = x.ravel()
    for i in coords:
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        fd = (fp - fm) / (2 * eps)
        a = g.ravel()[i]
        err = abs(fd - a) / max(abs(fd) + abs(a), 1e-2)
        worst = max(worst, err)
    return worst
