from __future__ import annotations

import numpy as np

from ..errors import DimensionError, NumericError, StateError
from ..imgcore import Rng
from . import layers as L
from .layers import LayerKind, LayerSpec


class NetworkGraph:
    """Ordered layers over one flat parameter vector ``theta``.

    Each layer's weights are numpy views into ``theta`` (and its gradients
    views into ``grad``), so optimizers and checkpoints work on flat arrays.
    """

    def __init__(self, specs, input_shape, dtype=np.float32):
        self.specs = [s if isinstance(s, LayerSpec) else LayerSpec(**s) for s in specs]
        self.input_shape = tuple(int(d) for d in input_shape)
        self.dtype = np.dtype(dtype)
        shapes = [self.input_shape]
        for spec in self.specs:
            shapes.append(spec.output_shape(shapes[-1]))
        if shapes[-1] != (2,):
            raise DimensionError(f"final layer must produce 2 outputs, got {shapes[-1]}")
        self.shapes = shapes

        self.slices: list[tuple[int, int]] = []
        p_layout, b_layout = [], []
        p_off = b_off = 0
        for spec in self.specs:
            start = p_off
            lay = []
            for name, shape in spec.param_shapes():
                n = int(np.prod(shape))
                lay.append((name, shape, p_off, n))
                p_off += n
            p_layout.append(lay)
            self.slices.append((start, p_off))
            blay = []
            for name, shape in spec.buffer_shapes():
                n = int(np.prod(shape))
                blay.append((name, shape, b_off, n))
                b_off += n
            b_layout.append(blay)

        self.theta = np.zeros(p_off, dtype=self.dtype)
        self.grad = np.zeros(p_off, dtype=self.dtype)
        self.buffers = np.zeros(b_off, dtype=self.dtype)
        self._p_layout, self._b_layout = p_layout, b_layout
        self._bind()
        for spec, buf in zip(self.specs, self.buffer_views):
            if "running_var" in buf:
                buf["running_var"][...] = 1.0
        self.training = False
        self.want_input_grad = False
        self._caches = None

    def _bind(self):
        def views(arr, layout):
            return [{name: arr[o:o + n].reshape(shape) for name, shape, o, n in lay} for lay in layout]

        self.param_views = views(self.theta, self._p_layout)
        self.grad_views = views(self.grad, self._p_layout)
        self.buffer_views = views(self.buffers, self._b_layout)

    @property
    def num_params(self) -> int:
        return self.theta.size

    def init_params(self, rng: Rng) -> "NetworkGraph":
        """He-normal weights, zero biases, unit BatchNorm scale."""
        for spec, p in zip(self.specs, self.param_views):
            if spec.kind in (LayerKind.CONV2D, LayerKind.POINTWISE_CONV2D):
                fan_in = spec.in_ch * spec.kernel ** 2
            elif spec.kind is LayerKind.DEPTHWISE_CONV2D:
                fan_in = spec.kernel ** 2
            elif spec.kind is LayerKind.LINEAR:
                fan_in = spec.in_ch
            elif spec.kind is LayerKind.BATCHNORM2D:
                p["gamma"][...] = 1.0
                p["beta"][...] = 0.0
                continue
            else:
                continue
            w = p["weight"]
            w[...] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=w.shape)
            p["bias"][...] = 0.0
        return self

    def copy(self) -> "NetworkGraph":
        other = NetworkGraph(self.specs, self.input_shape, self.dtype)
        other.theta[...] = self.theta
        other.buffers[...] = self.buffers
        return other

    def astype(self, dtype) -> "NetworkGraph":
        other = NetworkGraph(self.specs, self.input_shape, dtype)
        other.theta[...] = self.theta
        other.buffers[...] = self.buffers
        return other

    def train(self, mode: bool = True) -> "NetworkGraph":
        self.training = mode
        return self

    def eval(self) -> "NetworkGraph":
        return self.train(False)

    def forward_tensor(self, x: np.ndarray) -> np.ndarray:
        """Forward pass on an N x C x H x W array already scaled to [0, 1]."""
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.input_shape:
            raise DimensionError(f"expected input {self.input_shape}, got {x.shape[1:]}")
        caches = []
        for spec, p, b in zip(self.specs, self.param_views, self.buffer_views):
            x, cache = L.forward(spec, p, b, x, self.training)
            caches.append(cache)
        if not np.all(np.isfinite(x)):
            raise NumericError("non-finite logits")
        self._caches = caches
        return x

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        """Overwrites ``self.grad`` with dL/dtheta given dL/dlogits and returns it."""
        if self._caches is None:
            raise StateError("backward called without a cached forward pass")
        g = np.asarray(grad_logits, dtype=self.dtype)
        n = len(self.specs)
        for i in reversed(range(n)):
            need = i > 0 or self.want_input_grad
            g = L.backward(self.specs[i], self.param_views[i], self._caches[i], g,
                           self.grad_views[i], need_input_grad=need)
        self.input_grad = g
        self._caches = None
        return self.grad


def to_network_input(batch: np.ndarray) -> np.ndarray:
    """N x H x W x C samples in [0, 255] -> N x C x H x W in [0, 1]."""
    batch = np.asarray(batch, dtype=np.float32)
    if batch.ndim == 3:
        batch = batch[None]
    return np.ascontiguousarray(batch.transpose(0, 3, 1, 2)) / np.float32(255.0)


def forward(net: NetworkGraph, batch: np.ndarray) -> np.ndarray:
    """Logits (N x 2) for a batch of Byte0255 images shaped N x H x W x C."""
    return net.forward_tensor(to_network_input(batch).astype(net.dtype, copy=False))


def backward(net: NetworkGraph, grad_logits: np.ndarray) -> np.ndarray:
    return net.backward(grad_logits)


def predict(logits: np.ndarray) -> np.ndarray:
    """Class decision; ties go to class 0."""
    return (logits[:, 1] > logits[:, 0]).astype(np.int64)


def positive_probability(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64)
    return 1.0 / (1.0 + np.exp(np.clip(z[:, 0] - z[:, 1], -700, 700)))
