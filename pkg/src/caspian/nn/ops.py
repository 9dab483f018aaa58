"""Differentiable ops: convolutions, pooling, dense, activations, glue.

Layout is NHWC. Convolution weights are (kh, kw, in_per_group, out);
transposed-convolution weights are (kh, kw, in, out). 'same' padding
pads symmetrically with the extra cell on the bottom/right and yields
ceil(size / stride) outputs.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, grad_enabled

__all__ = [
    "conv2d",
    "transposed_conv2d",
    "pool2d",
    "max_pool2d",
    "avg_pool2d",
    "dense",
    "activation",
    "relu",
    "tanh",
    "sigmoid",
    "add",
    "mul",
    "concat",
    "reshape",
    "mean_over_hw",
    "channel_sum",
    "masked_huber_mean",
]


def _fresh(data, name=None) -> Tensor:
    t = Tensor(data, name=name)
    t._fresh = True
    return t


def _result(data, parents, backward_builder, name=None):
    """Attach a tape node unless recording is off or no parent needs it."""
    if grad_enabled() and any(p.needs_grad for p in parents):
        return Tensor(data, parents=parents, backward_fn=backward_builder(), name=name)
    return _fresh(data, name=name)


def _same_geometry(size: int, k: int, s: int) -> tuple[int, int, int]:
    out = -(-size // s)
    pad_total = max((out - 1) * s + k - size, 0)
    before = pad_total // 2
    return out, before, pad_total - before


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] > 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Convolution


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1,
           padding: str = "same", groups: int = 1) -> Tensor:
    """Grouped cross-correlation. Weight shape (kh, kw, in/groups, out).

    Parameter count: kh*kw*(in/groups)*out + out.
    """
    xv = x.data
    w = weight.data
    if xv.ndim != 4:
        raise ValueError("conv2d expects NHWC input")
    n, h, wdt, cin = xv.shape
    kh, kw, cpg, cout = w.shape
    if cin % groups or cout % groups:
        raise ValueError(f"channels in={cin} out={cout} must divide groups={groups}")
    if cpg != cin // groups:
        raise ValueError(f"weight expects {cpg} channels per group, input provides {cin // groups}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if padding == "same":
        ho, pt, pb = _same_geometry(h, kh, stride)
        wo, pl, pr = _same_geometry(wdt, kw, stride)
    elif padding == "valid":
        if h < kh or wdt < kw:
            raise ValueError("input smaller than kernel under 'valid' padding")
        ho, pt, pb = (h - kh) // stride + 1, 0, 0
        wo, pl, pr = (wdt - kw) // stride + 1, 0, 0
    else:
        raise ValueError(f"unknown padding {padding!r}")

    pointwise = kh == 1 and kw == 1 and stride == 1 and groups == 1 and padding == "same"
    depthwise = groups == cin and cout == cin and not pointwise

    bias_v = bias.data if bias is not None else None

    if pointwise:
        x2 = xv.reshape(-1, cin)
        w2 = w.reshape(cin, cout)
        y = x2 @ w2
        if bias_v is not None:
            y += bias_v
        y = y.reshape(n, h, wdt, cout)

        def build():
            def backward(dy):
                dy2 = dy.reshape(-1, cout)
                if weight.needs_grad:
                    weight.accumulate((x2.T @ dy2).reshape(w.shape))
                if bias is not None and bias.needs_grad:
                    bias.accumulate(dy2.sum(axis=0))
                if x.needs_grad:
                    x.accumulate((dy2 @ w2.T).reshape(xv.shape))
            return backward

        parents = (x, weight) if bias is None else (x, weight, bias)
        return _result(y, parents, build, name="conv2d")

    xp = np.pad(xv, ((0, 0), (pt, pb), (pl, pr), (0, 0))) if (pt or pb or pl or pr) else xv

    if depthwise:
        y = np.zeros((n, ho, wo, cout), dtype=xv.dtype)
        for a in range(kh):
            for b in range(kw):
                sl = xp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :]
                y += sl * w[a, b, 0, :]
        if bias_v is not None:
            y += bias_v

        def build():
            def backward(dy):
                if weight.needs_grad:
                    dw = np.zeros_like(w)
                    for a in range(kh):
                        for b in range(kw):
                            sl = xp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :]
                            dw[a, b, 0, :] = (sl * dy).sum(axis=(0, 1, 2))
                    weight.accumulate(dw)
                if bias is not None and bias.needs_grad:
                    bias.accumulate(dy.sum(axis=(0, 1, 2)))
                if x.needs_grad:
                    dxp = np.zeros_like(xp)
                    for a in range(kh):
                        for b in range(kw):
                            dxp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :] += dy * w[a, b, 0, :]
                    x.accumulate(dxp[:, pt : pt + h, pl : pl + wdt, :])
            return backward

        parents = (x, weight) if bias is None else (x, weight, bias)
        return _result(y, parents, build, name="conv2d")

    # General grouped path via im2col.
    opg = cout // groups
    taps = kh * kw
    p = n * ho * wo
    cols = np.empty((n, ho, wo, taps, cin), dtype=xv.dtype)
    for a in range(kh):
        for b in range(kw):
            cols[:, :, :, a * kw + b, :] = xp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :]
    colsg = cols.reshape(p, taps, groups, cpg).transpose(2, 0, 1, 3).reshape(groups, p, taps * cpg)
    wg = w.reshape(kh, kw, cpg, groups, opg).transpose(3, 0, 1, 2, 4).reshape(groups, taps * cpg, opg)
    yg = np.matmul(colsg, wg)  # (groups, p, opg)
    y = yg.transpose(1, 0, 2).reshape(n, ho, wo, cout)
    if bias_v is not None:
        y += bias_v

    def build():
        def backward(dy):
            dyg = dy.reshape(p, groups, opg).transpose(1, 0, 2)
            if weight.needs_grad:
                dwg = np.matmul(colsg.transpose(0, 2, 1), dyg)  # (groups, taps*cpg, opg)
                dw = dwg.reshape(groups, kh, kw, cpg, opg).transpose(1, 2, 3, 0, 4).reshape(w.shape)
                weight.accumulate(dw)
            if bias is not None and bias.needs_grad:
                bias.accumulate(dy.sum(axis=(0, 1, 2)))
            if x.needs_grad:
                dcolsg = np.matmul(dyg, wg.transpose(0, 2, 1))  # (groups, p, taps*cpg)
                dcols = dcolsg.reshape(groups, p, taps, cpg).transpose(1, 2, 0, 3).reshape(n, ho, wo, taps, cin)
                dxp = np.zeros_like(xp)
                for a in range(kh):
                    for b in range(kw):
                        dxp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :] += dcols[:, :, :, a * kw + b, :]
                x.accumulate(dxp[:, pt : pt + h, pl : pl + wdt, :])
        return backward

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _result(y, parents, build, name="conv2d")


def transposed_conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1) -> Tensor:
    """Gradient-of-convolution upsampling. Weight shape (kh, kw, in, out).

    Output spatial size is (in - 1) * stride + k, i.e. exactly
    in * stride when k == stride. Parameter count: kh*kw*in*out + out.
    """
    xv = x.data
    w = weight.data
    n, h, wdt, cin = xv.shape
    kh, kw, wcin, cout = w.shape
    if wcin != cin:
        raise ValueError(f"weight expects {wcin} input channels, got {cin}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    ho = (h - 1) * stride + kh
    wo = (wdt - 1) * stride + kw
    x2 = xv.reshape(-1, cin)

    if kh == stride and kw == stride:
        # Non-overlapping taps tile the output exactly: one matmul over
        # all taps, then interleave.
        w2 = w.transpose(2, 0, 1, 3).reshape(cin, kh * kw * cout)
        t = (x2 @ w2).reshape(n, h, wdt, kh, kw, cout)
        y = np.ascontiguousarray(t.transpose(0, 1, 3, 2, 4, 5)).reshape(n, ho, wo, cout)
        if bias is not None:
            y += bias.data

        def build():
            def backward(dy):
                if bias is not None and bias.needs_grad:
                    bias.accumulate(dy.sum(axis=(0, 1, 2)))
                dt = dy.reshape(n, h, kh, wdt, kw, cout).transpose(0, 1, 3, 2, 4, 5)
                dt2 = np.ascontiguousarray(dt).reshape(-1, kh * kw * cout)
                if weight.needs_grad:
                    dw2 = x2.T @ dt2  # (cin, kh*kw*cout)
                    weight.accumulate(dw2.reshape(cin, kh, kw, cout).transpose(1, 2, 0, 3))
                if x.needs_grad:
                    x.accumulate((dt2 @ w2.T).reshape(xv.shape))
            return backward

        parents = (x, weight) if bias is None else (x, weight, bias)
        return _result(y, parents, build, name="transposed_conv2d")

    y = np.zeros((n, ho, wo, cout), dtype=xv.dtype)
    for a in range(kh):
        for b in range(kw):
            t = (x2 @ w[a, b]).reshape(n, h, wdt, cout)
            y[:, a : a + (h - 1) * stride + 1 : stride, b : b + (wdt - 1) * stride + 1 : stride, :] += t
    if bias is not None:
        y += bias.data

    def build():
        def backward(dy):
            if bias is not None and bias.needs_grad:
                bias.accumulate(dy.sum(axis=(0, 1, 2)))
            dx2 = np.zeros_like(x2) if x.needs_grad else None
            dw = np.zeros_like(w) if weight.needs_grad else None
            for a in range(kh):
                for b in range(kw):
                    sl = dy[:, a : a + (h - 1) * stride + 1 : stride, b : b + (wdt - 1) * stride + 1 : stride, :]
                    sl2 = np.ascontiguousarray(sl).reshape(-1, cout)
                    if dx2 is not None:
                        dx2 += sl2 @ w[a, b].T
                    if dw is not None:
                        dw[a, b] = x2.T @ sl2
            if dx2 is not None:
                x.accumulate(dx2.reshape(xv.shape))
            if dw is not None:
                weight.accumulate(dw)
        return backward

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _result(y, parents, build, name="transposed_conv2d")


# ---------------------------------------------------------------------------
# Pooling


def pool2d(x: Tensor, window: int, stride: int, mode: str = "max") -> Tensor:
    """Per-channel window reduction with ceil-division edge handling.

    Edge windows only aggregate cells that exist; for 'avg' the divisor
    is the number of valid cells in the window.
    """
    if mode not in ("max", "avg"):
        raise ValueError(f"unknown pooling mode {mode!r}")
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    xv = x.data
    n, h, w, c = xv.shape
    ho, pt, pb = _same_geometry(h, window, stride)
    wo, pl, pr = _same_geometry(w, window, stride)
    taps = window * window

    if mode == "max":
        fill = -np.inf
        xp = np.pad(xv, ((0, 0), (pt, pb), (pl, pr), (0, 0)), constant_values=fill) if (pt or pb or pl or pr) else xv
    else:
        xp = np.pad(xv, ((0, 0), (pt, pb), (pl, pr), (0, 0))) if (pt or pb or pl or pr) else xv

    stack = np.empty((n, ho, wo, taps, c), dtype=xv.dtype)
    for a in range(window):
        for b in range(window):
            stack[:, :, :, a * window + b, :] = xp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :]

    if mode == "max":
        arg = stack.argmax(axis=3)
        y = np.take_along_axis(stack, arg[:, :, :, None, :], axis=3).squeeze(axis=3)

        def build():
            def backward(dy):
                if not x.needs_grad:
                    return
                dxp = np.zeros((n, h + pt + pb, w + pl + pr, c), dtype=xv.dtype)
                for t in range(taps):
                    a, b = divmod(t, window)
                    contrib = np.where(arg == t, dy, 0)
                    dxp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :] += contrib
                x.accumulate(dxp[:, pt : pt + h, pl : pl + w, :])
            return backward

        return _result(y, (x,), build, name="max_pool2d")

    # avg: count only in-bounds cells per window
    ones = np.ones((1, h, w, 1), dtype=xv.dtype)
    onesp = np.pad(ones, ((0, 0), (pt, pb), (pl, pr), (0, 0))) if (pt or pb or pl or pr) else ones
    counts = np.zeros((1, ho, wo, 1), dtype=xv.dtype)
    for a in range(window):
        for b in range(window):
            counts += onesp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :]
    y = stack.sum(axis=3) / counts

    def build():
        def backward(dy):
            if not x.needs_grad:
                return
            scaled = dy / counts
            dxp = np.zeros((n, h + pt + pb, w + pl + pr, c), dtype=xv.dtype)
            for a in range(window):
                for b in range(window):
                    dxp[:, a : a + (ho - 1) * stride + 1 : stride, b : b + (wo - 1) * stride + 1 : stride, :] += scaled
            x.accumulate(dxp[:, pt : pt + h, pl : pl + w, :])
        return backward

    return _result(y, (x,), build, name="avg_pool2d")


def max_pool2d(x: Tensor, window: int = 2, stride: int = 2) -> Tensor:
    return pool2d(x, window, stride, "max")


def avg_pool2d(x: Tensor, window: int = 2, stride: int = 2) -> Tensor:
    return pool2d(x, window, stride, "avg")


# ---------------------------------------------------------------------------
# Dense and activations


def dense(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map on (N, in) inputs. Parameter count: in*out + out."""
    xv = x.data
    w = weight.data
    if xv.ndim != 2:
        raise ValueError("dense expects (batch, features) input")
    y = xv @ w
    if bias is not None:
        y = y + bias.data

    def build():
        def backward(dy):
            if weight.needs_grad:
                weight.accumulate(xv.T @ dy)
            if bias is not None and bias.needs_grad:
                bias.accumulate(dy.sum(axis=0))
            if x.needs_grad:
                x.accumulate(dy @ w.T)
        return backward

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _result(y, parents, build, name="dense")


def relu(x: Tensor) -> Tensor:
    if not grad_enabled():
        if x._fresh:
            np.maximum(x.data, 0, out=x.data)
            return x
        return _fresh(np.maximum(x.data, 0))
    y = np.maximum(x.data, 0)

    def build():
        positive = x.data > 0  # derivative taken as 0 at exactly 0

        def backward(dy):
            if x.needs_grad:
                x.accumulate(dy * positive)
        return backward

    return _result(y, (x,), build, name="relu")


def tanh(x: Tensor) -> Tensor:
    if not grad_enabled():
        if x._fresh:
            np.tanh(x.data, out=x.data)
            return x
        return _fresh(np.tanh(x.data))
    y = np.tanh(x.data)

    def build():
        def backward(dy):
            if x.needs_grad:
                x.accumulate(dy * (1.0 - y * y))
        return backward

    return _result(y, (x,), build, name="tanh")


def _sigmoid_values(xv: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    y = np.empty_like(xv) if out is None else out
    pos = xv >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-xv[pos]))
    e = np.exp(xv[~pos])
    y[~pos] = e / (1.0 + e)
    return y


def sigmoid(x: Tensor) -> Tensor:
    if not grad_enabled():
        if x._fresh:
            _sigmoid_values(x.data, out=x.data)
            return x
        return _fresh(_sigmoid_values(x.data))
    y = _sigmoid_values(x.data)

    def build():
        def backward(dy):
            if x.needs_grad:
                x.accumulate(dy * y * (1.0 - y))
        return backward

    return _result(y, (x,), build, name="sigmoid")


_ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid}


def activation(x: Tensor, kind: str) -> Tensor:
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {sorted(_ACTIVATIONS)}") from None
    return fn(x)


# ---------------------------------------------------------------------------
# Structural ops


def _inplace_target(a: Tensor, b: Tensor) -> Tensor | None:
    """Pick an operand whose buffer can absorb an elementwise result."""
    out_shape = np.broadcast_shapes(a.data.shape, b.data.shape)
    if a._fresh and a.data.shape == out_shape:
        return a
    if b._fresh and b.data.shape == out_shape:
        return b
    return None


def add(a: Tensor, b: Tensor) -> Tensor:
    if not grad_enabled():
        target = _inplace_target(a, b)
        if target is not None:
            other = b if target is a else a
            target.data += other.data
            return target
        return _fresh(a.data + b.data)
    y = a.data + b.data

    def build():
        def backward(dy):
            if a.needs_grad:
                a.accumulate(_unbroadcast(dy, a.data.shape))
            if b.needs_grad:
                b.accumulate(_unbroadcast(dy, b.data.shape))
        return backward

    return _result(y, (a, b), build, name="add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    if not grad_enabled():
        target = _inplace_target(a, b)
        if target is not None:
            other = b if target is a else a
            target.data *= other.data
            return target
        return _fresh(a.data * b.data)
    y = a.data * b.data

    def build():
        def backward(dy):
            if a.needs_grad:
                a.accumulate(_unbroadcast(dy * b.data, a.data.shape))
            if b.needs_grad:
                b.accumulate(_unbroadcast(dy * a.data, b.data.shape))
        return backward

    return _result(y, (a, b), build, name="mul")


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    y = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def build():
        def backward(dy):
            offset = 0
            for t, size in zip(tensors, sizes):
                if t.needs_grad:
                    idx = [slice(None)] * dy.ndim
                    idx[axis] = slice(offset, offset + size)
                    t.accumulate(dy[tuple(idx)])
                offset += size
        return backward

    return _result(y, tuple(tensors), build, name="concat")


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    y = x.data.reshape(shape)
    if not grad_enabled():
        t = Tensor(y)
        t._fresh = x._fresh  # y may be a view of x's buffer
        return t

    def build():
        def backward(dy):
            if x.needs_grad:
                x.accumulate(dy.reshape(x.data.shape))
        return backward

    return _result(y, (x,), build, name="reshape")


def mean_over_hw(x: Tensor) -> Tensor:
    """Global average pool: (N, H, W, C) -> (N, C)."""
    n, h, w, c = x.data.shape
    y = x.data.mean(axis=(1, 2))

    def build():
        def backward(dy):
            if x.needs_grad:
                x.accumulate(np.broadcast_to(dy[:, None, None, :] / (h * w), x.data.shape))
        return backward

    return _result(y, (x,), build, name="mean_over_hw")


def channel_sum(x: Tensor) -> Tensor:
    """Sum over channels, keeping the axis: (N, H, W, C) -> (N, H, W, 1)."""
    y = x.data.sum(axis=3, keepdims=True)

    def build():
        def backward(dy):
            if x.needs_grad:
                x.accumulate(np.broadcast_to(dy, x.data.shape))
        return backward

    return _result(y, (x,), build, name="channel_sum")


def masked_huber_mean(pred: Tensor, target: np.ndarray, mask: np.ndarray, theta: float) -> Tensor:
    """Mean Huber loss over masked cells, averaged over the batch.

    target and mask are constants with pred's shape; each sample is
    normalized by its own masked-cell count before batch averaging.
    """
    pv = pred.data
    target = np.asarray(target, dtype=pv.dtype)
    mask = np.asarray(mask, dtype=bool)
    if target.shape != pv.shape or mask.shape != pv.shape:
        raise ValueError("pred, target and mask shapes must match")
    n = pv.shape[0]
    counts = mask.reshape(n, -1).sum(axis=1).astype(pv.dtype)
    if np.any(counts == 0):
        raise ValueError("every sample needs at least one masked cell")
    delta = pv - target
    absd = np.abs(delta)
    cell = np.where(absd <= theta, 0.5 * delta * delta, theta * absd - 0.5 * theta * theta)
    cell = np.where(mask, cell, 0)
    per_sample = cell.reshape(n, -1).sum(axis=1) / counts
    y = np.asarray(per_sample.mean(), dtype=pv.dtype)

    def build():
        def backward(dy):
            if pred.needs_grad:
                g = np.clip(delta, -theta, theta)
                g = np.where(mask, g, 0)
                g /= counts.reshape((n,) + (1,) * (pv.ndim - 1)) * n
                pred.accumulate(dy * g)
        return backward

    return _result(y, (pred,), build, name="masked_huber_mean")

