"""Binary checkpoint format.

Layout (all little-endian)::

    8s   magic "LAIDCKPT"
    u32  format version
    u32  input C, u32 H, u32 W
    u32  layer count
    per layer: u8 kind, 5 x i32 (in_ch, out_ch, kernel, stride, padding)
    u64  parameter count, u64 buffer count
    f32  parameters, then buffers
    u64  byte length of everything above
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from .layers import LayerSpec
from .network import NetworkGraph

MAGIC = b"LAIDCKPT"
VERSION = 1
_LAYER = struct.Struct("<B5i")


def dumps(net: NetworkGraph) -> bytes:
    parts = [MAGIC, struct.pack("<I3II", VERSION, *net.input_shape, len(net.specs))]
    for s in net.specs:
        parts.append(_LAYER.pack(int(s.kind), s.in_ch, s.out_ch, s.kernel, s.stride, s.padding))
    parts.append(struct.pack("<QQ", net.theta.size, net.buffers.size))
    parts.append(net.theta.astype("<f4").tobytes())
    parts.append(net.buffers.astype("<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<Q", len(body))


def loads(blob: bytes) -> NetworkGraph:
    if len(blob) < 8 + 20 + 16 + 8 or blob[:8] != MAGIC:
        raise DataError("not a LAIDCKPT checkpoint")
    (length,) = struct.unpack_from("<Q", blob, len(blob) - 8)
    if length != len(blob) - 8:
        raise DataError(f"checkpoint length check failed ({length} != {len(blob) - 8})")
    version, c, h, w, n_layers = struct.unpack_from("<I3II", blob, 8)
    if version != VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    off = 8 + 20
    specs = []
    for _ in range(n_layers):
        kind, *fields = _LAYER.unpack_from(blob, off)
        off += _LAYER.size
        specs.append(LayerSpec(kind, *fields))
    n_params, n_buf = struct.unpack_from("<QQ", blob, off)
    off += 16
    net = NetworkGraph(specs, (c, h, w))
    if (n_params, n_buf) != (net.theta.size, net.buffers.size):
        raise DataError("payload size does not match the layer table")
    net.theta[...] = np.frombuffer(blob, "<f4", n_params, off)
    off += 4 * n_params
    net.buffers[...] = np.frombuffer(blob, "<f4", n_buf, off)
    return net


def save(net: NetworkGraph, path) -> None:
    Path(path).write_bytes(dumps(net))


def load(path) -> NetworkGraph:
    return loads(Path(path).read_bytes())
