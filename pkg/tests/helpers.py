"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np

from laid.imgcore import Rng
from laid.nn import layers as L
from laid.nn.layers import LayerKind, LayerSpec

FD_EPS = 1e-3


def random_layer_case(kind: LayerKind, rng: Rng):
    """(spec, input) for a small random configuration of ``kind`` (float64)."""
    n = int(rng.integers(1, 3))
    c = int(rng.integers(1, 3))
    h, w = int(rng.integers(3, 6)), int(rng.integers(3, 6))
    k = int(rng.choice((1, 2, 3)))
    stride = int(rng.integers(1, 2))
    pad = int(rng.integers(0, 1)) if k > 1 else 0
    if kind is LayerKind.CONV2D:
        spec = LayerSpec(kind, c, int(rng.integers(1, 3)), k, stride, pad)
    elif kind is LayerKind.DEPTHWISE_CONV2D:
        spec = LayerSpec(kind, c, c, k, stride, pad)
    elif kind is LayerKind.POINTWISE_CONV2D:
        spec = LayerSpec(kind, c, int(rng.integers(1, 3)), 1, stride, 0)
    elif kind is LayerKind.MAXPOOL2D:
        spec = LayerSpec(kind, c, c, max(k, 2), stride, 0)
    elif kind is LayerKind.LINEAR:
        spec = LayerSpec(kind, c * h * w, int(rng.integers(1, 4)))
    elif kind is LayerKind.BATCHNORM2D:
        n = max(n, 2)
        spec = LayerSpec(kind, c, c)
    else:
        spec = LayerSpec(kind, c, c)
    size = n * c * h * w
    if kind is LayerKind.MAXPOOL2D:
        # distinct values spaced wider than 2 * eps so no window argmax flips
        x = rng.permutation(size).astype(np.float64) / size
    elif kind is LayerKind.RELU:
        x = rng.uniform(-1, 1, size)
        x = np.where(np.abs(x) < 10 * FD_EPS, x + np.sign(x + 1e-12) * 0.1, x)
    else:
        x = rng.uniform(0, 1, size)
    return spec, x.reshape(n, c, h, w)


def layer_gradcheck(spec: LayerSpec, x: np.ndarray, rng: Rng, eps: float = FD_EPS,
                    dtype=np.float64) -> float:
    """Worst norm-wise relative error between analytic and central-difference
    gradients of L = sum(layer(x) * R) over the input and every parameter."""
    params = {name: rng.normal(0, 0.5, shape).astype(dtype) for name, shape in spec.param_shapes()}
    if spec.kind is LayerKind.BATCHNORM2D:
        params["gamma"] = rng.uniform(0.5, 1.5, params["gamma"].shape).astype(dtype)
    x = x.astype(dtype)
    train = True

    def bufs():
        return {name: (np.ones(s) if name == "running_var" else np.zeros(s)).astype(dtype)
                for name, s in spec.buffer_shapes()}

    y, cache = L.forward(spec, params, bufs(), x, train)
    r = rng.normal(0, 1, y.shape).astype(dtype)
    grads = {name: np.zeros_like(v) for name, v in params.items()}
    gx = L.backward(spec, params, cache, r, grads, need_input_grad=True)

    def loss():
        out, _ = L.forward(spec, params, bufs(), x, train)
        return float(np.sum(out.astype(np.float64) * r))

    def numeric(arr):
        g = np.zeros(arr.shape, dtype=np.float64)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = loss()
            flat[i] = old - eps
            down = loss()
            flat[i] = old
            gflat[i] = (up - down) / (2 * eps)
        return g

    pairs = [(gx, numeric(x))] + [(grads[n], numeric(params[n])) for n in params]
    worst = 0.0
    for analytic, num in pairs:
        scale = max(np.linalg.norm(analytic), np.linalg.norm(num), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - num) / scale))
    return worst


def naive_dft(x):
    """O(N^4) textbook DFT, summing exp(-2 pi i (uy/H + vx/W)) directly."""
    h, w = x.shape
    out = np.zeros((h, w), dtype=np.complex128)
    for u in range(h):
        for v in range(w):
            acc = 0j
            for y in range(h):
                for xx in range(w):
                    acc += x[y, xx] * np.exp(-2j * np.pi * (u * y / h + v * xx / w))
            out[u, v] = acc
    return out


def brute_force_auc(scores, labels) -> float:
    """Fraction of (positive, negative) pairs ranked correctly, ties count 1/2."""
    pos = [s for s, g in zip(scores, labels) if g == 1]
    neg = [s for s, g in zip(scores, labels) if g == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))
