import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import textured_image
from oracles import lbp_codes_direct, uniform_bin_direct
from visent.features import (Codebook, DescriptorConfig, bow_spatial_pyramid, concat_lowlevel,
                             dense_patch_descriptors, gist, lbp, load_codebook, lowlevel_layout, rgb_histogram,
                             save_codebook, train_codebook)
from visent.features.lbp import bin_lookup
from visent.tensor import to_gray

DEFAULT = DescriptorConfig()


# --- colour histogram -------------------------------------------------------

def test_histogram_black():
    h = rgb_histogram(np.zeros((5, 5, 3)))
    assert h.shape == (768,)
    for c in range(3):
        assert h[c * 256] == 1 and h[c * 256 + 1:(c + 1) * 256].sum() == 0


def test_histogram_half_black_half_white():
    img = np.zeros((4, 4, 3))
    img[2:] = 255
    h = rgb_histogram(img).reshape(3, 256)
    np.testing.assert_array_equal(h[:, 0], 0.5)
    np.testing.assert_array_equal(h[:, 255], 0.5)
    assert h[:, 1:255].sum() == 0


def test_histogram_rejects_gray():
    with pytest.raises(ValueError):
        rgb_histogram(np.zeros((3, 3)))


def test_histogram_normalised(rng):
    h = rgb_histogram(rng.integers(0, 256, (20, 30, 3))).reshape(3, 256)
    assert np.all(h >= 0)
    np.testing.assert_allclose(h.sum(axis=1), 1, atol=1e-6)


# --- GIST ---------------------------------------------------------------------

def test_gist_dimension_and_determinism(rng):
    img = textured_image(rng, 60)
    g = gist(img)
    assert g.shape == (512,) == (DEFAULT.gist_dim,)
    assert gist(img.copy()).tobytes() == g.tobytes()
    assert np.all(g >= 0) and g.max() > 0


def test_gist_constant_image_vanishes():
    g = gist(np.full((90, 70, 3), 140.0)).reshape(32, 16)
    # every filter has zero DC gain, so a flat image yields no response
    assert np.abs(g).max() < 1e-3
    np.testing.assert_allclose(g, np.repeat(g[:, :1], 16, axis=1), atol=1e-3)


def test_gist_orientation_selectivity():
    # vertical stripes vary along x -> energy in the orientation-0 filters
    x = np.arange(128)
    stripes = np.tile(127.5 + 100 * np.sin(2 * np.pi * x * 0.25 / 2), (128, 1))
    g = gist(stripes).reshape(4, 8, 16).mean(axis=2)
    assert g[1].argmax() == 0


# --- LBP ----------------------------------------------------------------------

def test_lbp_uniform_table_has_59_bins():
    table = bin_lookup("uniform")
    assert table.max() + 1 == 59 == DEFAULT.lbp_dim
    assert [uniform_bin_direct(c) for c in range(256)] == table.tolist()
    assert DescriptorConfig(lbp_mode="riu2").lbp_dim == 10
    assert DescriptorConfig(lbp_mode="full").lbp_dim == 256


def test_lbp_constant_image():
    h = lbp(np.full((6, 7), 9.0))
    assert h.shape == (59,)
    assert h[uniform_bin_direct(255)] == 1.0 and h.sum() == 1.0


def test_lbp_step_edge_matches_enumeration():
    img = np.zeros((10, 10))
    img[:, 5:] = 200.0
    h = lbp(img)
    codes = lbp_codes_direct(img)
    expected = np.bincount([uniform_bin_direct(c) for c in codes], minlength=59) / len(codes)
    np.testing.assert_allclose(h, expected, atol=1e-7)
    # left of the edge every neighbour is >= 0; right of it the three west neighbours are darker
    assert set(codes) == {255, 0b11000111}
    assert np.count_nonzero(h) == 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_lbp_matches_enumeration_on_random_8x8(seed):
    img = np.random.default_rng(seed).integers(0, 4, (8, 8)).astype(np.float64)
    h = lbp(img)
    codes = lbp_codes_direct(to_gray(img))
    expected = np.bincount([uniform_bin_direct(c) for c in codes], minlength=59) / len(codes)
    np.testing.assert_allclose(h, expected, atol=1e-7)
    assert abs(float(h.sum()) - 1) < 1e-6


def test_lbp_errors():
    with pytest.raises(ValueError):
        lbp(np.zeros((2, 5)))


# --- dense patches --------------------------------------------------------------

def test_dense_patch_grid():
    centers, desc = dense_patch_descriptors(np.zeros((16, 16)))
    assert desc.shape == (1, 128)
    centers, desc = dense_patch_descriptors(np.zeros((40, 33)))
    assert desc.shape == (4 * 3, 128)
    assert dense_patch_descriptors(np.zeros((10, 40)))[1].shape == (0, 128)


def test_dense_patch_constant_is_zero():
    _, desc = dense_patch_descriptors(np.full((32, 32, 3), 77.0))
    assert not desc.any()


def test_dense_patch_ramp_is_horizontal():
    ramp = np.tile(np.arange(40.0) * 3, (40, 1))
    _, desc = dense_patch_descriptors(ramp)
    per_bin = desc.reshape(-1, 16, 8).sum(axis=(0, 1))
    assert per_bin[0] > 0
    assert per_bin[[1, 2, 3, 5, 6, 7]].sum() == 0
    _, desc = dense_patch_descriptors(ramp[:, ::-1])
    per_bin = desc.reshape(-1, 16, 8).sum(axis=(0, 1))
    assert per_bin[4] > 0 and per_bin.sum() == per_bin[4]


def test_dense_patch_normalisation(rng):
    _, desc = dense_patch_descriptors(textured_image(rng, 40))
    np.testing.assert_allclose(np.linalg.norm(desc, axis=1), 1, atol=1e-6)
    # renormalisation after clamping may lift entries slightly above 0.2 but never to 1
    assert desc.max() < 0.5


# --- codebook -------------------------------------------------------------------

def two_clusters(rng, n=60):
    a = rng.normal(0, 0.5, (n, 4))
    b = rng.normal(50, 0.5, (n + 7, 4))
    return np.concatenate([a, b]), a.mean(axis=0), b.mean(axis=0)


def test_codebook_two_clusters(rng):
    x, ma, mb = two_clusters(rng)
    cb = train_codebook(x, k=2, seed=0)
    got = sorted(cb.centroids.astype(np.float64).tolist())
    want = sorted([ma.tolist(), mb.tolist()])
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_codebook_exact_fit(rng):
    points = rng.normal(0, 1, (12, 3))
    x = np.concatenate([points, points[:5]])
    cb = train_codebook(x, k=12, seed=3)
    assert cb.inertia_trace[-1] == pytest.approx(0, abs=1e-9)
    np.testing.assert_allclose(sorted(cb.centroids.tolist()), sorted(points.astype(np.float32).tolist()), atol=1e-6)


def test_codebook_deterministic_and_monotone(rng):
    x = rng.normal(0, 1, (400, 8))
    a = train_codebook(x, k=20, seed=7)
    b = train_codebook(x, k=20, seed=7)
    assert a.centroids.tobytes() == b.centroids.tobytes()
    trace = np.array(a.inertia_trace)
    assert np.all(np.diff(trace) <= 1e-9 * trace[0])


def test_codebook_needs_distinct_points():
    with pytest.raises(ValueError, match="distinct"):
        train_codebook(np.ones((50, 3)), k=2)


def test_codebook_file_round_trip(tmp_path, rng):
    cb = train_codebook(rng.normal(0, 1, (50, 4)), k=5, seed=2 ** 40 + 1)
    save_codebook(tmp_path / "cb.bin", cb)
    back = load_codebook(tmp_path / "cb.bin")
    assert back.centroids.tobytes() == cb.centroids.tobytes()
    assert back.seed == 2 ** 40 + 1 and back.iterations == cb.iterations


# --- bag of words -------------------------------------------------------------

@pytest.fixture(scope="module")
def small_codebook():
    rng = np.random.default_rng(0)
    descs = np.concatenate([dense_patch_descriptors(textured_image(rng, 40))[1] for _ in range(10)])
    return train_codebook(descs, k=16, seed=0)


def test_bow_dimension_default():
    rng = np.random.default_rng(1)
    cb = Codebook(rng.normal(0, 1, (1000, 128)).astype(np.float32))
    v = bow_spatial_pyramid(textured_image(rng, 48), cb)
    assert v.shape == (5000,) == (DEFAULT.bow_dim,)


def test_bow_single_patch_trace(rng):
    img = textured_image(rng, 16)
    _, desc = dense_patch_descriptors(img)
    words = rng.normal(0, 1, (4, 128)).astype(np.float32) * 10
    words[2] = desc[0]
    cfg = DescriptorConfig(codebook_size=4)
    v = bow_spatial_pyramid(img, Codebook(words), cfg)
    expected = np.zeros(20)
    expected[2] = 1          # whole image
    expected[4 + 0 * 4 + 2] = 1  # centre (7.5, 7.5) lies in the top-left quadrant
    np.testing.assert_array_equal(v, expected)


def test_bow_binary_and_level_dominance(small_codebook, rng):
    cfg = DescriptorConfig(codebook_size=16)
    for size in (16, 24, 40, 57):
        v = bow_spatial_pyramid(textured_image(rng, size), small_codebook, cfg)
        assert set(np.unique(v)) <= {0.0, 1.0}
        blocks = v.reshape(5, 16)
        np.testing.assert_array_equal(blocks[0], blocks[1:].max(axis=0))


def test_bow_empty_and_mismatch(small_codebook):
    cfg = DescriptorConfig(codebook_size=16)
    assert not bow_spatial_pyramid(np.zeros((8, 8, 3)), small_codebook, cfg).any()
    with pytest.raises(ValueError):
        bow_spatial_pyramid(np.zeros((16, 16)), Codebook(np.zeros((3, 5), np.float32)), cfg)


# --- concatenation --------------------------------------------------------------

def test_lowlevel_default_dimension():
    assert DEFAULT.lowlevel_dim == 768 + 512 + 59 + 5000 == 6339


def test_concat_offsets(small_codebook, rng):
    cfg = DescriptorConfig(codebook_size=16)
    img = textured_image(rng, 40)
    v = concat_lowlevel(img, small_codebook, cfg)
    layout = lowlevel_layout(cfg)
    assert v.shape == (cfg.lowlevel_dim,)
    np.testing.assert_array_equal(v[layout["histogram"]], rgb_histogram(img))
    np.testing.assert_array_equal(v[layout["gist"]], gist(img, cfg))
    np.testing.assert_array_equal(v[layout["lbp"]], lbp(img, cfg))
    np.testing.assert_array_equal(v[layout["bow"]], bow_spatial_pyramid(img, small_codebook, cfg))
    assert concat_lowlevel(img.copy(), small_codebook, cfg).tobytes() == v.tobytes()
