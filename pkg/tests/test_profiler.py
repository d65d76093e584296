import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laid.errors import DimensionError
from laid.nn import LayerKind, LayerSpec, NetworkGraph, tiny_detector_arch
from laid.profiler import MAX_FLOPS, MAX_PARAMS, count_flops, count_params, profile


def single_layer(spec, in_shape):
    """Wrap ``spec`` so the graph ends in two outputs; returns the wrapped layer's cost."""
    out = spec.output_shape(in_shape)
    tail = [LayerSpec(LayerKind.LINEAR, int(np.prod(out)), 2)] if out != (2,) else []
    net = NetworkGraph([spec] + tail, in_shape)
    return profile(net).per_layer[0]


def test_linear_64_to_2():
    c = single_layer(LayerSpec(LayerKind.LINEAR, 64, 2), (64, 1, 1))
    assert c.params == 130 and c.flops == 256 and c.macs == 128


def test_conv_3_to_8_on_4x4():
    c = single_layer(LayerSpec(LayerKind.CONV2D, 3, 8, 3, 1, 1), (3, 4, 4))
    assert c.params == 224
    assert c.flops == 2 * (3 * 3 * 3) * 8 * 16 == 6912


def test_tiny_detector_totals_match_hand_sum():
    net = tiny_detector_arch(256)
    report = profile(net)
    # stem conv on 128x128 output, then depthwise/pointwise pairs at 64, 32, 16
    macs = 27 * 8 * 128 * 128
    for cin, cout, side in ((8, 16, 64), (16, 32, 32), (32, 64, 16)):
        macs += 9 * cin * side * side + cin * cout * side * side
    macs += 64 * 2
    relu = 8 * 128 ** 2 + sum(c * s * s for c, s in ((8, 64), (16, 64), (16, 32), (32, 32), (32, 16), (64, 16)))
    gap = 64
    assert report.macs == macs
    assert report.flops == 2 * macs + relu + gap
    assert count_params(net) == report.params == 3714 < MAX_PARAMS
    assert report.flops < 0.1e9 < MAX_FLOPS
    assert report.satisfies_constraints()


def test_totals_are_sums_of_layers():
    r = profile(tiny_detector_arch(64))
    assert r.params == sum(c.params for c in r.per_layer)
    assert r.flops == sum(c.flops for c in r.per_layer)
    assert all(c.params >= 0 and c.flops >= 0 for c in r.per_layer)
    assert r.totals()["flops"] == r.flops
    assert "total" in r.table()


def test_batchnorm_and_pool_costs():
    c = single_layer(LayerSpec(LayerKind.BATCHNORM2D, 4, 4), (4, 3, 3))
    assert c.params == 8 and c.flops == 2 * 36
    c = single_layer(LayerSpec(LayerKind.MAXPOOL2D, 2, 2, 2, 2), (2, 4, 4))
    assert c.params == 0 and c.flops == 8


def test_profile_at_other_input_shape():
    net = tiny_detector_arch(256)
    assert count_flops(net, (3, 64, 64)) == profile(tiny_detector_arch(64)).flops


def test_shape_mismatch_raises():
    net = NetworkGraph([LayerSpec(LayerKind.LINEAR, 12, 2)], (3, 2, 2))
    with pytest.raises(DimensionError):
        count_flops(net, (3, 4, 4))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.sampled_from([1, 3, 5]), st.integers(3, 9))
def test_doubling_out_channels_doubles_cost(cin, cout, k, side):
    pad = k // 2
    a = single_layer(LayerSpec(LayerKind.CONV2D, cin, cout, k, 1, pad), (cin, side, side))
    b = single_layer(LayerSpec(LayerKind.CONV2D, cin, 2 * cout, k, 1, pad), (cin, side, side))
    assert b.params == 2 * a.params
    assert b.flops == 2 * a.flops


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(3, 12), st.integers(3, 12))
def test_stride_one_conv_flops_linear_in_area(cin, cout, h, w):
    spec = LayerSpec(LayerKind.CONV2D, cin, cout, 3, 1, 1)
    per_pixel = single_layer(spec, (cin, 1, 1)).flops
    assert single_layer(spec, (cin, h, w)).flops == per_pixel * h * w
