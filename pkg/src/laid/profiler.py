"""Static parameter and FLOP accounting over a NetworkGraph.

Convolution and linear layers cost 2 FLOPs per multiply-accumulate; ReLU and
pooling cost 1 op per output element; BatchNorm costs 2 per element (scale,
shift). Bias additions are not counted. MACs are reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn.layers import LayerKind, LayerSpec
from .nn.network import NetworkGraph

MAX_PARAMS = 10**7
MAX_FLOPS = 10**9


@dataclass(frozen=True)
class LayerCost:
    index: int
    kind: str
    params: int
    macs: int
    flops: int


@dataclass
class CostReport:
    input_shape: tuple[int, ...]
    per_layer: list[LayerCost] = field(default_factory=list)

    @property
    def params(self) -> int:
        return sum(c.params for c in self.per_layer)

    @property
    def macs(self) -> int:
        return sum(c.macs for c in self.per_layer)

    @property
    def flops(self) -> int:
        return sum(c.flops for c in self.per_layer)

    def satisfies_constraints(self) -> bool:
        return self.params < MAX_PARAMS or self.flops < MAX_FLOPS

    def table(self) -> str:
        rows = [f"{'layer':>5}  {'kind':<18}{'params':>10}{'MACs':>14}{'FLOPs':>14}"]
        for c in self.per_layer:
            rows.append(f"{c.index:>5}  {c.kind:<18}{c.params:>10}{c.macs:>14}{c.flops:>14}")
        rows.append(f"{'total':>5}  {'':<18}{self.params:>10}{self.macs:>14}{self.flops:>14}")
        return "\n".join(rows)

    def totals(self) -> dict:
        return {"input_shape": list(self.input_shape), "params": self.params,
                "macs": self.macs, "flops": self.flops}


def layer_params(spec: LayerSpec) -> int:
    return sum(int(np.prod(shape)) for _, shape in spec.param_shapes())


def layer_cost(spec: LayerSpec, in_shape, out_shape) -> tuple[int, int]:
    """(MACs, FLOPs) of one forward pass through ``spec``."""
    out_elems = int(np.prod(out_shape))
    k = spec.kind
    if k in (LayerKind.CONV2D, LayerKind.POINTWISE_CONV2D):
        macs = spec.kernel ** 2 * spec.in_ch * out_elems
    elif k is LayerKind.DEPTHWISE_CONV2D:
        macs = spec.kernel ** 2 * out_elems
    elif k is LayerKind.LINEAR:
        macs = spec.in_ch * spec.out_ch
    elif k is LayerKind.BATCHNORM2D:
        return 0, 2 * out_elems
    else:
        return 0, out_elems
    return macs, 2 * macs


def count_params(net: NetworkGraph) -> int:
    return sum(layer_params(s) for s in net.specs)


def profile(net: NetworkGraph, input_shape=None) -> CostReport:
    """Per-layer cost at ``input_shape`` (C, H, W); defaults to the graph's own."""
    shape = tuple(input_shape) if input_shape is not None else net.input_shape
    report = CostReport(shape)
    for i, spec in enumerate(net.specs):
        out = spec.output_shape(shape)
        macs, flops = layer_cost(spec, shape, out)
        report.per_layer.append(LayerCost(i, spec.kind.name, layer_params(spec), macs, flops))
        shape = out
    return report


def count_flops(net: NetworkGraph, input_shape=None) -> int:
    return profile(net, input_shape).flops
