from __future__ import annotations

from .layers import LayerKind, LayerSpec
from .network import NetworkGraph


def tiny_detector_specs(width=(8, 16, 32, 64)) -> list[LayerSpec]:
    """Stride-2 conv stem, three depthwise-separable stride-2 blocks, GAP, 2-way head."""
    specs = [
        LayerSpec(LayerKind.CONV2D, 3, width[0], kernel=3, stride=2, padding=1),
        LayerSpec(LayerKind.RELU),
    ]
    for c_in, c_out in zip(width[:-1], width[1:]):
        specs += [
            LayerSpec(LayerKind.DEPTHWISE_CONV2D, c_in, c_in, kernel=3, stride=2, padding=1),
            LayerSpec(LayerKind.RELU),
            LayerSpec(LayerKind.POINTWISE_CONV2D, c_in, c_out),
            LayerSpec(LayerKind.RELU),
        ]
    specs += [LayerSpec(LayerKind.GLOBAL_AVG_POOL), LayerSpec(LayerKind.LINEAR, width[-1], 2)]
    return specs


def tiny_detector_arch(input_size: int = 256) -> NetworkGraph:
    return NetworkGraph(tiny_detector_specs(), (3, input_size, input_size))
