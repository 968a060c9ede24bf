"""Differentiable array operations recorded on the active tape.

Each function computes its result with numpy and, when an active tape is
tracking any input, appends a node whose backward closure maps the output
adjoint to input adjoints. Broadcasting follows numpy; adjoints are summed
back down to the operand shapes.

Shape conventions: images and feature maps are (batch, channels, height,
width); convolution kernels are (out_ch, in_ch, k, k) shared across the batch
or (batch, out_ch, in_ch, k, k) per-sample, with odd k, zero padding
(k - 1) / 2 and stride 1 or 2.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import ShapeMismatch, UnknownAttribute, UnknownOperation
from .engine import Tensor, active_tape

__all__ = [
    "add", "sub", "mul", "div", "scale", "sqrt", "exp", "log", "softplus",
    "leaky_relu", "tanh", "sigmoid", "clamp", "softmax", "cross_entropy",
    "matmul", "affine", "conv2d", "upsample2x", "maxpool2x2", "sum_", "mean_",
    "reshape", "broadcast_to", "concat", "slice_axis", "select_index",
    "rotate_bilinear", "forward_op", "as_tensor",
]


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x), dtype=dtype or np.float64)


def _vals(*tensors):
    """Cast operand arrays to the common op dtype (the tape's, if active)."""
    tape = active_tape()
    if tape is not None:
        dt = tape.dtype
    else:
        dt = np.result_type(*(t.data.dtype for t in tensors))
        if dt not in (np.float32, np.float64):
            dt = np.float64
    return tuple(np.asarray(t.data, dtype=dt) for t in tensors)


def _apply(kind, inputs, out_data, backward_fn):
    tape = active_tape()
    if tape is not None and any(
        t.requires_grad or (t.tape is tape and t.node_id is not None) for t in inputs
    ):
        return tape.record(kind, inputs, out_data, backward_fn)
    return Tensor(out_data)


def _unbroadcast(g, shape):
    """Sum an adjoint down to the shape numpy broadcast it from."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _check_broadcast(kind, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeMismatch(f"{kind}: cannot broadcast {a.shape} with {b.shape}") from e


# ------------------------------------------------------------- elementwise

def add(x, y):
    a, b = _vals(x, y)
    _check_broadcast("add", a, b)
    out = a + b
    return _apply("add", (x, y), out,
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(x, y):
    a, b = _vals(x, y)
    _check_broadcast("sub", a, b)
    out = a - b
    return _apply("sub", (x, y), out,
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(x, y):
    a, b = _vals(x, y)
    _check_broadcast("mul", a, b)
    out = a * b
    return _apply("mul", (x, y), out,
                  lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)))


def div(x, y):
    a, b = _vals(x, y)
    _check_broadcast("div", a, b)
    out = a / b
    return _apply("div", (x, y), out,
                  lambda g: (_unbroadcast(g / b, a.shape),
                             _unbroadcast(-g * a / (b * b), b.shape)))


def scale(x, factor):
    (a,) = _vals(x)
    f = float(factor)
    return _apply("scale", (x,), a * f, lambda g: (g * f,))


def sqrt(x):
    (a,) = _vals(x)
    out = np.sqrt(a)
    return _apply("sqrt", (x,), out, lambda g: (g * (0.5 / out),))


def exp(x):
    (a,) = _vals(x)
    out = np.exp(a)
    return _apply("exp", (x,), out, lambda g: (g * out,))


def log(x):
    (a,) = _vals(x)
    return _apply("log", (x,), np.log(a), lambda g: (g / a,))


def softplus(x):
    (a,) = _vals(x)
    out = np.logaddexp(np.zeros((), dtype=a.dtype), a)
    sig = _sigmoid_stable(a)
    return _apply("softplus", (x,), out, lambda g: (g * sig,))


def leaky_relu(x, slope=0.2):
    (a,) = _vals(x)
    slope = float(slope)
    factor = np.where(a > 0, np.asarray(1.0, dtype=a.dtype),
                      np.asarray(slope, dtype=a.dtype))
    return _apply("leaky_relu", (x,), a * factor, lambda g: (g * factor,))


def tanh(x):
    (a,) = _vals(x)
    out = np.tanh(a)
    return _apply("tanh", (x,), out, lambda g: (g * (1.0 - out * out),))


def _sigmoid_stable(a):
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x):
    (a,) = _vals(x)
    out = _sigmoid_stable(a)
    return _apply("sigmoid", (x,), out, lambda g: (g * out * (1.0 - out),))


def clamp(x, lo=0.0, hi=1.0):
    (a,) = _vals(x)
    out = np.clip(a, lo, hi)
    inside = ((a > lo) & (a < hi)).astype(a.dtype)
    return _apply("clamp", (x,), out, lambda g: (g * inside,))


# ------------------------------------------------------------ reductions

def _restore_axes(g, in_shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, in_shape)
    axes = (axis,) if np.isscalar(axis) else tuple(axis)
    if not keepdims:
        for ax in sorted(ax % len(in_shape) for ax in axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, in_shape)


def sum_(x, axis=None, keepdims=False):
    (a,) = _vals(x)
    out = a.sum(axis=axis, keepdims=keepdims)
    return _apply("sum", (x,), np.asarray(out),
                  lambda g: (np.ascontiguousarray(_restore_axes(g, a.shape, axis, keepdims)),))


def mean_(x, axis=None, keepdims=False):
    (a,) = _vals(x)
    out = a.mean(axis=axis, keepdims=keepdims)
    count = a.size / np.asarray(out).size
    return _apply("mean", (x,), np.asarray(out),
                  lambda g: (np.ascontiguousarray(
                      _restore_axes(g, a.shape, axis, keepdims)) / count,))


def softmax(x, axis=-1):
    (a,) = _vals(x)
    m = a.max(axis=axis, keepdims=True)
    e = np.exp(a - m)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return ((g - inner) * out,)

    return _apply("softmax", (x,), out, bwd)


def cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer ``labels`` under the logits."""
    (a,) = _vals(logits)
    if a.ndim != 2:
        raise ShapeMismatch(f"cross_entropy expects (batch, classes) logits, got {a.shape}")
    y = np.asarray(labels, dtype=np.int64)
    n = a.shape[0]
    if y.shape != (n,):
        raise ShapeMismatch(f"cross_entropy labels shape {y.shape} != ({n},)")
    m = a.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(a - m).sum(axis=1))
    out = np.asarray((lse - a[np.arange(n), y]).mean(), dtype=a.dtype)

    def bwd(g):
        p = np.exp(a - m)
        p /= p.sum(axis=1, keepdims=True)
        p[np.arange(n), y] -= 1.0
        return (p * (g / n),)

    return _apply("cross_entropy", (logits,), out, bwd)


# --------------------------------------------------------------- linear

def matmul(x, y):
    a, b = _vals(x, y)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatch(f"matmul needs rank >= 2 operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    out = np.matmul(a, b)

    def bwd(g):
        ga = _unbroadcast(np.matmul(g, b.swapaxes(-1, -2)), a.shape)
        gb = _unbroadcast(np.matmul(a.swapaxes(-1, -2), g), b.shape)
        return (ga, gb)

    return _apply("matmul", (x, y), out, bwd)


def affine(x, w, b):
    """Fully connected layer: x @ w + b for x (batch, fin), w (fin, fout)."""
    a, wm, bv = _vals(x, w, b)
    if a.ndim != 2 or wm.ndim != 2 or a.shape[1] != wm.shape[0] or bv.shape != (wm.shape[1],):
        raise ShapeMismatch(
            f"affine: x {a.shape}, w {wm.shape}, b {bv.shape} are inconsistent")
    out = a @ wm + bv

    def bwd(g):
        return (g @ wm.T, a.T @ g, g.sum(axis=0))

    return _apply("affine", (x, w, b), out, bwd)


# ----------------------------------------------------------- convolution

def _im2col(x, k, stride, pad):
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    ho, wo = win.shape[2], win.shape[3]
    cols = np.ascontiguousarray(win.transpose(0, 1, 4, 5, 2, 3)).reshape(
        n, c * k * k, ho * wo)
    return cols, ho, wo


def _col2im(cols, x_shape, k, stride, pad, ho, wo):
    n, c, h, w = x_shape
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    cols6 = cols.reshape(n, c, k, k, ho, wo)
    for di in range(k):
        for dj in range(k):
            xp[:, :, di:di + stride * ho:stride, dj:dj + stride * wo:stride] += \
                cols6[:, :, di, dj]
    return xp[:, :, pad:pad + h, pad:pad + w]


def conv2d(x, w, stride=1):
    """2-D cross-correlation with zero padding (k - 1) / 2.

    ``w`` may be (out_ch, in_ch, k, k) shared across the batch or
    (batch, out_ch, in_ch, k, k) for per-sample kernels.
    """
    a, kern = _vals(x, w)
    if stride not in (1, 2):
        raise UnknownAttribute(f"conv2d stride must be 1 or 2, got {stride}")
    if a.ndim != 4:
        raise ShapeMismatch(f"conv2d input must be (batch, ch, h, w), got {a.shape}")
    per_sample = kern.ndim == 5
    if kern.ndim not in (4, 5):
        raise ShapeMismatch(f"conv2d kernel rank must be 4 or 5, got {kern.shape}")
    if per_sample and kern.shape[0] != a.shape[0]:
        raise ShapeMismatch(
            f"per-sample kernel batch {kern.shape[0]} != input batch {a.shape[0]}")
    co, ci, kh, kw = kern.shape[-4:]
    if kh != kw or kh % 2 == 0:
        raise ShapeMismatch(f"conv2d kernel must be square with odd extent, got {kern.shape}")
    if ci != a.shape[1]:
        raise ShapeMismatch(
            f"conv2d kernel in_ch {ci} != input channels {a.shape[1]}")
    k, pad = kh, (kh - 1) // 2
    n = a.shape[0]
    cols, ho, wo = _im2col(a, k, stride, pad)
    w_mat = kern.reshape((n, co, ci * k * k) if per_sample else (co, ci * k * k))
    out = np.matmul(w_mat, cols).reshape(n, co, ho, wo)

    def bwd(g):
        g_mat = g.reshape(n, co, ho * wo)
        grad_w = np.matmul(g_mat, cols.transpose(0, 2, 1))
        grad_w = grad_w.reshape(kern.shape) if per_sample \
            else grad_w.sum(axis=0).reshape(kern.shape)
        wt = w_mat.transpose(0, 2, 1) if per_sample else w_mat.T
        grad_cols = np.matmul(wt, g_mat)
        grad_x = _col2im(grad_cols, a.shape, k, stride, pad, ho, wo)
        return (grad_x, grad_w)

    return _apply("conv2d", (x, w), out, bwd)


def upsample2x(x):
    """Nearest-neighbour 2x spatial upsampling."""
    (a,) = _vals(x)
    if a.ndim != 4:
        raise ShapeMismatch(f"upsample2x input must be (batch, ch, h, w), got {a.shape}")
    out = a.repeat(2, axis=2).repeat(2, axis=3)
    n, c, h, w = a.shape
    return _apply("upsample2x", (x,), out,
                  lambda g: (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),))


def maxpool2x2(x):
    """2x2 max pooling, stride 2; gradient routes to the argmax element
    (ties broken by first index in row-major window order)."""
    (a,) = _vals(x)
    if a.ndim != 4 or a.shape[2] % 2 or a.shape[3] % 2:
        raise ShapeMismatch(f"maxpool2x2 needs even spatial extents, got {a.shape}")
    n, c, h, w = a.shape
    win = np.ascontiguousarray(
        a.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    ).reshape(n, c, h // 2, w // 2, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]

    def bwd(g):
        z = np.zeros_like(win)
        np.put_along_axis(z, idx[..., None], g[..., None], axis=-1)
        return (np.ascontiguousarray(
            z.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        ).reshape(a.shape),)

    return _apply("maxpool2x2", (x,), out, bwd)


# ------------------------------------------------------------ structural

def reshape(x, shape):
    (a,) = _vals(x)
    out = a.reshape(shape)
    return _apply("reshape", (x,), out, lambda g: (g.reshape(a.shape),))


def broadcast_to(x, shape):
    (a,) = _vals(x)
    try:
        out = np.ascontiguousarray(np.broadcast_to(a, shape))
    except ValueError as e:
        raise ShapeMismatch(f"broadcast_to: {a.shape} -> {shape}") from e
    return _apply("broadcast_to", (x,), out, lambda g: (_unbroadcast(g, a.shape),))


def concat(tensors, axis=0):
    vals = _vals(*tensors)
    try:
        out = np.concatenate(vals, axis=axis)
    except ValueError as e:
        raise ShapeMismatch(f"concat: {[v.shape for v in vals]} along axis {axis}") from e
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, offsets, axis=axis))

    return _apply("concat", tuple(tensors), out, bwd)


def slice_axis(x, axis, start, length):
    (a,) = _vals(x)
    if start < 0 or length < 0 or start + length > a.shape[axis]:
        raise ShapeMismatch(
            f"slice [{start}:{start + length}] outside axis {axis} of {a.shape}")
    index = tuple(slice(None) if i != axis % a.ndim else slice(start, start + length)
                  for i in range(a.ndim))
    out = np.ascontiguousarray(a[index])

    def bwd(g):
        z = np.zeros_like(a)
        z[index] = g
        return (z,)

    return _apply("slice", (x,), out, bwd)


def select_index(x, indices):
    """Pick one column per row: out[i] = x[i, indices[i]]."""
    (a,) = _vals(x)
    if a.ndim != 2:
        raise ShapeMismatch(f"select_index expects a 2-D tensor, got {a.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.shape != (a.shape[0],):
        raise ShapeMismatch(f"indices shape {idx.shape} != ({a.shape[0]},)")
    rows = np.arange(a.shape[0])
    out = a[rows, idx]

    def bwd(g):
        z = np.zeros_like(a)
        z[rows, idx] = g
        return (z,)

    return _apply("select_index", (x,), out, bwd)


# --------------------------------------------------------- image warping

def rotate_bilinear(image, angle):
    """Rotate a (h, w) image about its center by a scalar angle (radians),
    bilinear sampling, zero outside; differentiable in both image and angle."""
    a, th = _vals(image, angle)
    if a.ndim != 2:
        raise ShapeMismatch(f"rotate_bilinear expects a (h, w) image, got {a.shape}")
    if th.size != 1:
        raise ShapeMismatch("rotate_bilinear angle must be a scalar")
    h, w = a.shape
    theta = float(th.reshape(-1)[0])
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rr, cc = np.meshgrid(np.arange(h, dtype=a.dtype), np.arange(w, dtype=a.dtype),
                         indexing="ij")
    dr, dc = rr - cy, cc - cx
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    sr = cy + dr * cos_t + dc * sin_t
    sc = cx - dr * sin_t + dc * cos_t
    dsr = -dr * sin_t + dc * cos_t
    dsc = -dr * cos_t - dc * sin_t

    r0 = np.floor(sr).astype(np.int64)
    c0 = np.floor(sc).astype(np.int64)
    fr, fc = sr - r0, sc - c0

    corners = []
    for (ro, col, wgt) in (
        (r0, c0, (1 - fr) * (1 - fc)),
        (r0, c0 + 1, (1 - fr) * fc),
        (r0 + 1, c0, fr * (1 - fc)),
        (r0 + 1, c0 + 1, fr * fc),
    ):
        valid = (ro >= 0) & (ro < h) & (col >= 0) & (col < w)
        rs, cs = np.clip(ro, 0, h - 1), np.clip(col, 0, w - 1)
        val = np.where(valid, a[rs, cs], a.dtype.type(0))
        corners.append((rs, cs, valid, wgt, val))
    out = np.zeros_like(a)
    for _, _, _, wgt, val in corners:
        out += wgt * val

    v00, v01, v10, v11 = (c[4] for c in corners)
    dval_dsr = (1 - fc) * (v10 - v00) + fc * (v11 - v01)
    dval_dsc = (1 - fr) * (v01 - v00) + fr * (v11 - v10)

    def bwd(g):
        g_img = np.zeros_like(a)
        for rs, cs, valid, wgt, _ in corners:
            np.add.at(g_img, (rs, cs), np.where(valid, g * wgt, a.dtype.type(0)))
        g_theta = np.sum(g * (dval_dsr * dsr + dval_dsc * dsc))
        return (g_img, np.full(th.shape, g_theta, dtype=th.dtype))

    return _apply("rotate", (image, angle), out, bwd)


# -------------------------------------------------------------- dispatch

_REGISTRY = {
    "add": (add, set()),
    "sub": (sub, set()),
    "mul": (mul, set()),
    "div": (div, set()),
    "scale": (scale, {"factor"}),
    "sqrt": (sqrt, set()),
    "exp": (exp, set()),
    "log": (log, set()),
    "softplus": (softplus, set()),
    "leaky_relu": (leaky_relu, {"slope"}),
    "tanh": (tanh, set()),
    "sigmoid": (sigmoid, set()),
    "clamp": (clamp, {"lo", "hi"}),
    "softmax": (softmax, {"axis"}),
    "cross_entropy": (cross_entropy, {"labels"}),
    "matmul": (matmul, set()),
    "affine": (affine, set()),
    "conv2d": (conv2d, {"stride"}),
    "upsample2x": (upsample2x, set()),
    "maxpool2x2": (maxpool2x2, set()),
    "sum": (sum_, {"axis", "keepdims"}),
    "mean": (mean_, {"axis", "keepdims"}),
    "reshape": (reshape, {"shape"}),
    "broadcast_to": (broadcast_to, {"shape"}),
    "concat": (concat, {"axis"}),
    "slice": (slice_axis, {"axis", "start", "length"}),
    "select_index": (select_index, {"indices"}),
    "rotate": (rotate_bilinear, set()),
}


def forward_op(kind, inputs, attrs=None):
    """Dispatch an operation by name: forward_op("conv2d", [x, w], {"stride": 2})."""
    if kind not in _REGISTRY:
        raise UnknownOperation(f"unknown operation kind {kind!r}")
    fn, allowed = _REGISTRY[kind]
    attrs = dict(attrs or {})
    unknown = set(attrs) - allowed
    if unknown:
        raise UnknownAttribute(f"{kind} does not take attributes {sorted(unknown)}")
    if kind == "concat":
        return fn(list(inputs), **attrs)
    return fn(*inputs, **attrs)
