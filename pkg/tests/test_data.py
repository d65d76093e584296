from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laid.data import (DatasetManifest, DomainTag, ManifestEntry, Split, TensorCache,
                       build_spectral_cache, preprocess, read_pnm, scan_directory, split_val_test,
                       stratified_subsample, synth_cache, synth_dataset, write_pnm)
from laid.errors import DataError, ParameterError
from laid.imgcore import ImageTensor, RangeTag, Rng, spectral_image


def toy_manifest(per_stratum, generators):
    entries = [ManifestEntry(f"{g}/{'ai' if lab else 'nature'}/{i}.ppm", lab, g)
               for g in generators for lab in (0, 1) for i in range(per_stratum)]
    return DatasetManifest(entries)


def nyquist_band_energy(img):
    """Mean power of the outermost frequency ring (|f| > 0.4 cycles/pixel)."""
    gray = img.mean(axis=2)
    f = np.fft.fftfreq(gray.shape[0])
    band = np.maximum(np.abs(f[:, None]), np.abs(f[None, :])) > 0.4
    return float(np.mean(np.abs(np.fft.fft2(gray - gray.mean()))[band] ** 2))


# -- manifests -----------------------------------------------------------------------

def test_stratified_subsample_exact_counts():
    gens = [f"gen{i}" for i in range(8)]
    out = stratified_subsample(toy_manifest(6400, gens), 100_000, Rng(1))
    counts = Counter((e.label, e.generator) for e in out.entries)
    assert len(out) == 100_000 and set(counts.values()) == {6250} and len(counts) == 16


def test_subsample_full_population_is_identity_up_to_order():
    m = toy_manifest(5, ["a", "b"])
    out = stratified_subsample(m, 20, Rng(2))
    assert sorted(e.path for e in out.entries) == sorted(e.path for e in m.entries)


def test_subsample_replays_draw_sequence():
    m = toy_manifest(10, ["a", "b"])
    out = stratified_subsample(m, 12, Rng(3))
    replay = Rng(3)
    strata = m.strata()
    want = []
    for label in (0, 1):
        for gen in ("a", "b"):
            items = strata[(label, gen)]
            want += [items[i].path for i in replay.sample_indices(len(items), 3)]
    assert [e.path for e in out.entries] == want


def test_subsample_errors_name_the_stratum():
    m = toy_manifest(2, ["a", "b"])
    with pytest.raises(DataError, match="generator=a"):
        stratified_subsample(m, 12, Rng(0))
    with pytest.raises(ParameterError):
        stratified_subsample(m, 7, Rng(0))


def test_split_val_test_counts():
    gens = [f"gen{i}" for i in range(8)]
    val, test = split_val_test(toy_manifest(2000, gens), Rng(4))
    assert len(val) == len(test) == 16_000
    assert val.split is Split.VAL and test.split is Split.TEST


def test_split_two_item_stratum_and_odd_sizes():
    val, test = split_val_test(toy_manifest(2, ["a"]), Rng(5))
    assert len(val) == len(test) == 2
    val, test = split_val_test(toy_manifest(3, ["a"]), Rng(5))
    assert len(val) == 4 and len(test) == 2
    with pytest.raises(DataError):
        split_val_test(toy_manifest(1, ["a"]), Rng(5))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_split_is_a_partition(per, n_gen, seed):
    m = toy_manifest(per, [f"g{i}" for i in range(n_gen)])
    val, test = split_val_test(m, Rng(seed))
    vp, tp = [e.path for e in val.entries], [e.path for e in test.entries]
    assert not set(vp) & set(tp)
    assert Counter(vp + tp) == Counter(e.path for e in m.entries)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_subsample_balanced_histogram(per, n_gen, seed):
    m = toy_manifest(6, [f"g{i}" for i in range(n_gen)])
    out = stratified_subsample(m, 2 * n_gen * per, Rng(seed))
    labels = Counter(e.label for e in out.entries)
    assert labels[0] == labels[1] == n_gen * per


def test_manifest_round_trip(tmp_path):
    m = toy_manifest(2, ["x"])
    m.split = Split.TEST
    m.write(tmp_path / "m.tsv")
    back = DatasetManifest.read(tmp_path / "m.tsv")
    assert back.entries == m.entries and back.split is Split.TEST


# -- images / preprocessing ----------------------------------------------------------

def test_pnm_round_trip_and_ascii(tmp_path):
    data = np.round(Rng(1).uniform(0, 255, (5, 7, 3)))
    write_pnm(ImageTensor(data, RangeTag.BYTE0255), tmp_path / "a.ppm")
    np.testing.assert_array_equal(read_pnm(tmp_path / "a.ppm").data, data)
    (tmp_path / "b.pgm").write_text("P2\n# comment\n3 2\n15\n0 15 5\n10 0 15\n")
    img = read_pnm(tmp_path / "b.pgm")
    np.testing.assert_allclose(img.data[..., 0], [[0, 255, 85], [170, 0, 255]])
    (tmp_path / "c.png").write_bytes(b"\x89PNG")
    with pytest.raises(DataError):
        read_pnm(tmp_path / "c.png")


def test_scan_and_preprocess(tmp_path):
    for gen in ("g1", "g2"):
        for cls_name in ("nature", "ai"):
            d = tmp_path / gen / cls_name
            d.mkdir(parents=True)
            write_pnm(ImageTensor(np.full((12, 10), 50.0), RangeTag.BYTE0255), d / "x.pgm")
    m = scan_directory(tmp_path)
    assert len(m) == 4 and m.generators == ["g1", "g2"]
    assert sorted(e.label for e in m.entries) == [0, 0, 1, 1]
    cache = preprocess(m, 16)
    assert cache.images.shape == (4, 16, 16, 3) and np.all(cache.images == 50)
    with pytest.raises(DataError):
        scan_directory(tmp_path / "missing")


# -- tensor cache --------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(1, 5), st.integers(1, 5), st.sampled_from([1, 3]),
       st.sampled_from(list(RangeTag)), st.sampled_from(list(DomainTag)), st.integers(0, 2**32 - 1))
def test_cache_round_trip_bit_exact(n, h, w, c, tag, dom, seed):
    hi = 1.0 if tag is RangeTag.UNIT01 else 255.0
    images = Rng(seed).uniform(0, hi, (n, h, w, c)).astype(np.float32)
    labels = Rng(seed + 1).integers(0, 1, n)
    cache = TensorCache(images, labels, tag, dom)
    back = TensorCache.from_bytes(cache.to_bytes())
    assert back.images.tobytes() == cache.images.tobytes()
    assert np.array_equal(back.labels, cache.labels)
    assert back.range_tag is tag and back.domain is dom


def test_cache_detects_corruption(tmp_path):
    cache = synth_cache(8, Rng(0), 16)
    blob = bytearray(cache.to_bytes())
    blob[100] ^= 0xFF
    with pytest.raises(DataError, match="checksum"):
        TensorCache.from_bytes(bytes(blob))
    with pytest.raises(DataError):
        TensorCache.from_bytes(b"NOTACACHE" + bytes(40))
    with pytest.raises(DataError):
        TensorCache.read(tmp_path / "missing.cache")


def test_spectral_cache_contract():
    cache = TensorCache(np.full((3, 8, 8, 3), 40.0), [1, 0, 1])
    spec = build_spectral_cache(cache)
    assert spec.domain is DomainTag.SPECTRAL
    assert spec.labels.tobytes() == cache.labels.tobytes()
    assert np.all(spec.images[:, 4, 4, :] == 255)
    assert spec.images.sum() == 255 * 9
    with pytest.raises(DataError):
        build_spectral_cache(spec)


def test_spectral_cache_matches_dft_composition():
    images = np.round(Rng(2).uniform(0, 255, (2, 8, 8, 3)))
    spec = build_spectral_cache(TensorCache(images, [0, 1]))
    n = np.arange(8)
    dft = np.exp(-2j * np.pi * np.outer(n, n) / 8)
    for i in range(2):
        # log-magnitude per channel, then one min-max over the whole tensor
        mag = np.stack([np.log1p(np.abs(np.roll(dft @ images[i, :, :, c] @ dft.T, (4, 4), axis=(0, 1))))
                        for c in range(3)], axis=-1)
        want = (mag - mag.min()) / (mag.max() - mag.min()) * 255
        np.testing.assert_allclose(spec.images[i], want, atol=2e-3)
    assert np.array_equal(spec.images[0], spectral_image(ImageTensor(images[0], RangeTag.BYTE0255)).data)


# -- synthetic dataset ---------------------------------------------------------------

def test_synth_generator_statistics():
    cache = synth_cache(500, Rng(7), 64)
    nat, syn = cache.images[cache.labels == 0], cache.images[cache.labels == 1]
    assert abs(nat.mean() - syn.mean()) < 2
    e_nat = np.mean([nyquist_band_energy(im) for im in nat])
    e_syn = np.mean([nyquist_band_energy(im) for im in syn])
    assert e_syn >= 3 * e_nat


def test_synth_dataset_deterministic_and_shaped():
    a_tr, a_va = synth_dataset(8, Rng(11), 32)
    b_tr, b_va = synth_dataset(8, Rng(11), 32)
    assert a_tr.to_bytes() == b_tr.to_bytes() and a_va.to_bytes() == b_va.to_bytes()
    assert a_tr.images.shape == (16, 32, 32, 3) and len(a_va) == 4
    assert a_tr.images.min() >= 0 and a_tr.images.max() <= 255
    assert np.all(a_tr.images == np.round(a_tr.images))
    with pytest.raises(ParameterError):
        synth_dataset(4, Rng(0))
