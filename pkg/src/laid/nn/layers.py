"""Layer descriptors plus their forward and backward kernels (NCHW layout)."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, ParameterError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


class LayerKind(enum.IntEnum):
    CONV2D = 1
    DEPTHWISE_CONV2D = 2
    POINTWISE_CONV2D = 3
    RELU = 4
    MAXPOOL2D = 5
    GLOBAL_AVG_POOL = 6
    LINEAR = 7
    BATCHNORM2D = 8


CONV_KINDS = (LayerKind.CONV2D, LayerKind.DEPTHWISE_CONV2D, LayerKind.POINTWISE_CONV2D)


@dataclass(frozen=True)
class LayerSpec:
    """Shape description of one layer.

    For Linear, ``in_ch``/``out_ch`` are feature counts. For BatchNorm2d and
    DepthwiseConv2d only ``in_ch`` matters (``out_ch`` must equal it).
    """

    kind: LayerKind
    in_ch: int = 0
    out_ch: int = 0
    kernel: int = 1
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", LayerKind(self.kind))
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ParameterError(f"bad kernel/stride/padding in {self}")
        if self.kind is LayerKind.POINTWISE_CONV2D and (self.kernel, self.padding) != (1, 0):
            raise ParameterError("pointwise conv must have kernel 1, padding 0")
        if self.kind in (LayerKind.DEPTHWISE_CONV2D, LayerKind.BATCHNORM2D) and self.out_ch != self.in_ch:
            raise ParameterError(f"{self.kind.name} needs out_ch == in_ch")

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        k = self.kind
        if k in (LayerKind.CONV2D, LayerKind.POINTWISE_CONV2D):
            return [("weight", (self.out_ch, self.in_ch, self.kernel, self.kernel)),
                    ("bias", (self.out_ch,))]
        if k is LayerKind.DEPTHWISE_CONV2D:
            return [("weight", (self.in_ch, self.kernel, self.kernel)), ("bias", (self.in_ch,))]
        if k is LayerKind.LINEAR:
            return [("weight", (self.out_ch, self.in_ch)), ("bias", (self.out_ch,))]
        if k is LayerKind.BATCHNORM2D:
            return [("gamma", (self.in_ch,)), ("beta", (self.in_ch,))]
        return []

    def buffer_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        if self.kind is LayerKind.BATCHNORM2D:
            return [("running_mean", (self.in_ch,)), ("running_var", (self.in_ch,))]
        return []

    def output_shape(self, in_shape: tuple[int, ...]) -> tuple[int, ...]:
        k = self.kind
        if k is LayerKind.LINEAR:
            n = int(np.prod(in_shape))
            if n != self.in_ch:
                raise DimensionError(f"Linear expects {self.in_ch} features, got {in_shape}")
            return (self.out_ch,)
        if len(in_shape) != 3:
            raise DimensionError(f"{k.name} expects a C x H x W input, got {in_shape}")
        c, h, w = in_shape
        if k is LayerKind.RELU:
            return in_shape
        if k is LayerKind.GLOBAL_AVG_POOL:
            return (c,)
        if k in CONV_KINDS or k is LayerKind.BATCHNORM2D:
            if c != self.in_ch:
                raise DimensionError(f"{k.name} expects {self.in_ch} channels, got {c}")
        if k is LayerKind.BATCHNORM2D:
            return in_shape
        ho = (h + 2 * self.padding - self.kernel) // self.stride + 1
        wo = (w + 2 * self.padding - self.kernel) // self.stride + 1
        if ho < 1 or wo < 1:
            raise DimensionError(f"{k.name} produces empty output from {in_shape}")
        out_c = c if k is LayerKind.MAXPOOL2D else self.out_ch
        return (out_c, ho, wo)


def _pad(x, pad, value=0.0):
    if not pad:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)), constant_values=value)


def _unpad(x, pad):
    return x[:, :, pad:-pad, pad:-pad] if pad else x


def _out_hw(in_shape, spec):
    h, w = in_shape[2], in_shape[3]
    return ((h + 2 * spec.padding - spec.kernel) // spec.stride + 1,
            (w + 2 * spec.padding - spec.kernel) // spec.stride + 1)


def _shifted(xp, i, j, stride, ho, wo):
    """View of the padded input seen by kernel tap (i, j) at every output site."""
    return xp[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride]


def _im2col(x, k, stride, pad):
    """Columns shaped (N, C*k*k, Ho*Wo), channel-major then kernel row/col."""
    win, pshape = _windows(x, k, stride, pad)
    n, c, ho, wo = win.shape[:4]
    cols = np.ascontiguousarray(win.transpose(0, 1, 4, 5, 2, 3)).reshape(n, c * k * k, ho * wo)
    return cols, pshape, (ho, wo)


def _windows(x, k, stride, pad, pad_value=0.0):
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)), constant_values=pad_value)
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    return win, x.shape


def _col2im(gwin, padded_shape, k, stride, pad):
    """Scatter-add window gradients (N, C, Ho, Wo, k, k) back onto the input."""
    n, c, ho, wo = gwin.shape[:4]
    gx = np.zeros(padded_shape, dtype=gwin.dtype)
    for i in range(k):
        for j in range(k):
            gx[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += gwin[..., i, j]
    if pad:
        gx = gx[:, :, pad:-pad, pad:-pad]
    return gx


def forward(spec: LayerSpec, p: dict, buf: dict, x: np.ndarray, train: bool):
    """Returns (output, cache)."""
    k = spec.kind
    if k in (LayerKind.CONV2D, LayerKind.POINTWISE_CONV2D):
        cols, pshape, (ho, wo) = _im2col(x, spec.kernel, spec.stride, spec.padding)
        w2 = p["weight"].reshape(spec.out_ch, -1)
        y = np.matmul(w2, cols).reshape(x.shape[0], spec.out_ch, ho, wo)
        return y + p["bias"][None, :, None, None], (cols, pshape, (ho, wo))
    if k is LayerKind.DEPTHWISE_CONV2D:
        xp = _pad(x, spec.padding)
        ho, wo = _out_hw(x.shape, spec)
        y = np.zeros((x.shape[0], x.shape[1], ho, wo), dtype=x.dtype)
        w = p["weight"]
        for i in range(spec.kernel):
            for j in range(spec.kernel):
                y += w[None, :, i, j, None, None] * _shifted(xp, i, j, spec.stride, ho, wo)
        return y + p["bias"][None, :, None, None], (xp, x.shape)
    if k is LayerKind.RELU:
        mask = x > 0
        return x * mask, mask
    if k is LayerKind.MAXPOOL2D:
        win, pshape = _windows(x, spec.kernel, spec.stride, spec.padding, pad_value=-np.inf)
        flat = win.reshape(*win.shape[:4], -1)
        arg = flat.argmax(axis=-1)
        y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        return y, (arg, pshape, x.dtype)
    if k is LayerKind.GLOBAL_AVG_POOL:
        return x.mean(axis=(2, 3)), x.shape
    if k is LayerKind.LINEAR:
        xf = x.reshape(x.shape[0], -1)
        return xf @ p["weight"].T + p["bias"], (xf, x.shape)
    if k is LayerKind.BATCHNORM2D:
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = x.shape[0] * x.shape[2] * x.shape[3]
            buf["running_mean"] *= 1 - BN_MOMENTUM
            buf["running_mean"] += BN_MOMENTUM * mean
            buf["running_var"] *= 1 - BN_MOMENTUM
            buf["running_var"] += BN_MOMENTUM * var * (m / max(m - 1, 1))
        else:
            mean, var = buf["running_mean"], buf["running_var"]
        inv = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
        y = xhat * p["gamma"][None, :, None, None] + p["beta"][None, :, None, None]
        return y, (xhat, inv, train)
    raise ParameterError(f"unknown layer kind {k}")


def backward(spec: LayerSpec, p: dict, cache, gy: np.ndarray, grads: dict,
             need_input_grad: bool = True):
    """Writes parameter gradients into ``grads`` (in place) and returns dL/dx
    (``None`` for conv layers when ``need_input_grad`` is false)."""
    k = spec.kind
    if k in (LayerKind.CONV2D, LayerKind.POINTWISE_CONV2D):
        cols, pshape, (ho, wo) = cache
        n = gy.shape[0]
        g2 = gy.reshape(n, spec.out_ch, ho * wo)
        grads["weight"][...] = np.tensordot(g2, cols, axes=([0, 2], [0, 2])).reshape(grads["weight"].shape)
        grads["bias"][...] = g2.sum(axis=(0, 2))
        if not need_input_grad:
            return None
        gcols = np.matmul(p["weight"].reshape(spec.out_ch, -1).T, g2)
        c = pshape[1]
        gwin = gcols.reshape(n, c, spec.kernel, spec.kernel, ho, wo).transpose(0, 1, 4, 5, 2, 3)
        return _col2im(gwin, pshape, spec.kernel, spec.stride, spec.padding)
    if k is LayerKind.DEPTHWISE_CONV2D:
        xp, in_shape = cache
        ho, wo = gy.shape[2:]
        w = p["weight"]
        gw = grads["weight"]
        gxp = np.zeros_like(xp) if need_input_grad else None
        for i in range(spec.kernel):
            for j in range(spec.kernel):
                gw[:, i, j] = np.einsum("nchw,nchw->c", gy, _shifted(xp, i, j, spec.stride, ho, wo))
                if gxp is not None:
                    _shifted(gxp, i, j, spec.stride, ho, wo)[...] += gy * w[None, :, i, j, None, None]
        grads["bias"][...] = gy.sum(axis=(0, 2, 3))
        if gxp is None:
            return None
        return _unpad(gxp, spec.padding)
    if k is LayerKind.RELU:
        return gy * cache
    if k is LayerKind.MAXPOOL2D:
        arg, pshape, dtype = cache
        kk = spec.kernel * spec.kernel
        onehot = (arg[..., None] == np.arange(kk)).astype(dtype) * gy[..., None]
        gwin = onehot.reshape(*arg.shape, spec.kernel, spec.kernel)
        return _col2im(gwin, pshape, spec.kernel, spec.stride, spec.padding)
    if k is LayerKind.GLOBAL_AVG_POOL:
        shape = cache
        return np.broadcast_to(gy[:, :, None, None] / (shape[2] * shape[3]), shape).copy()
    if k is LayerKind.LINEAR:
        xf, shape = cache
        grads["weight"][...] = gy.T @ xf
        grads["bias"][...] = gy.sum(axis=0)
        return (gy @ p["weight"]).reshape(shape)
    if k is LayerKind.BATCHNORM2D:
        xhat, inv, train = cache
        grads["gamma"][...] = (gy * xhat).sum(axis=(0, 2, 3))
        grads["beta"][...] = gy.sum(axis=(0, 2, 3))
        gxhat = gy * p["gamma"][None, :, None, None]
        inv = inv[None, :, None, None]
        if not train:
            return gxhat * inv
        mean_g = gxhat.mean(axis=(0, 2, 3), keepdims=True)
        mean_gx = (gxhat * xhat).mean(axis=(0, 2, 3), keepdims=True)
        return inv * (gxhat - mean_g - xhat * mean_gx)
    raise ParameterError(f"unknown layer kind {k}")
