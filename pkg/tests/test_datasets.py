"""Generators, splitting, IDX parsing, CSV round-trips."""
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempolearn.datasets import (Dataset, IdxFormatError, category_support,
                                 gen_low_overlap, gen_multiscale,
                                 gen_non_overlapping_stream, load_dataset_csv,
                                 load_idx, make_low_overlap_templates,
                                 save_dataset_csv, train_test_split, write_idx)
from tempolearn.numerics import Rng


# --- low-overlap categories ---------------------------------------------------

def test_low_overlap_standard_sizes():
    ds = gen_low_overlap(Rng(1), 4, 300, 16, 0.1)
    assert len(ds) == 1200
    assert ds.feature_dim == 16
    assert ds.num_categories == 4
    assert np.array_equal(np.unique(ds.labels), np.arange(4))
    assert np.all(np.bincount(ds.labels) == 300)


def test_low_overlap_zero_noise_equals_template():
    ds = gen_low_overlap(Rng(1), 4, 5, 16, 0.0)
    templates = make_low_overlap_templates(4, 16)
    for c in range(4):
        rows = ds.samples[ds.labels == c]
        assert np.array_equal(rows, np.tile(templates[c].template, (5, 1)))


def test_low_overlap_high_blocks_disjoint():
    # oracle: block c occupies [c*dim//ncat, (c+1)*dim//ncat); enumerate and
    # intersect every pair
    for ncat, dim in [(4, 16), (2, 8), (5, 25)]:
        templates = make_low_overlap_templates(ncat, dim, high=0.8, low=0.2)
        blocks = []
        for tpl in templates:
            idx = set(np.nonzero(tpl.template == 0.8)[0].tolist())
            expected = set(range(tpl.category * (dim // ncat),
                                 (tpl.category + 1) * (dim // ncat)))
            assert idx == expected
            blocks.append(idx)
        for i in range(ncat):
            for j in range(i + 1, ncat):
                assert blocks[i] & blocks[j] == set()


def test_low_overlap_values_in_unit_interval():
    ds = gen_low_overlap(Rng(5), 4, 50, 16, 0.3)
    assert np.all(ds.samples >= 0.0)
    assert np.all(ds.samples <= 1.0)


# --- non-overlapping stream ---------------------------------------------------

def test_non_overlapping_supports():
    ds = gen_non_overlapping_stream(Rng(2), 2, 10, 8)
    assert set(category_support(ds, 0).tolist()) == {0, 1, 2, 3}
    assert set(category_support(ds, 1).tolist()) == {4, 5, 6, 7}


def test_non_overlapping_all_pairs_disjoint():
    ds = gen_non_overlapping_stream(Rng(3), 4, 6, 16)
    supports = [set(category_support(ds, c).tolist()) for c in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            assert supports[i] & supports[j] == set()


def test_antiphase_templates_mirror():
    a, b = make_low_overlap_templates(2, 8, antiphase=True)
    assert np.allclose(a.template - 0.5, -(b.template - 0.5))
    with pytest.raises(ValueError):
        make_low_overlap_templates(3, 9, antiphase=True)


# --- multiscale stream ----------------------------------------------------------

def test_multiscale_slow_runs():
    stream = gen_multiscale(Rng(4), 15, periods=(1, 3, 5))
    slow = stream.latent_states[2]
    changes = np.nonzero(slow[1:] != slow[:-1])[0] + 1
    assert changes.tolist() == [5, 10]
    lengths = np.diff(np.concatenate(([0], changes, [15])))
    assert lengths.tolist() == [5, 5, 5]


def test_multiscale_zero_noise_pairs_identical():
    stream = gen_multiscale(Rng(4), 30, noise_halfwidth=0.0)
    for k, sl in enumerate(stream.SUBCOMPONENT_SLICES):
        pair = stream.samples[:, sl]
        assert np.array_equal(pair[:, 0], pair[:, 1])
        assert np.array_equal(pair[:, 0], stream.latent_states[k])


def test_multiscale_default_interval():
    # bounds: low - noise = 0.1, high + noise = 0.9
    stream = gen_multiscale(Rng(6), 500)
    assert np.all(stream.samples >= 0.1 - 1e-12)
    assert np.all(stream.samples <= 0.9 + 1e-12)


def test_multiscale_rejects_escaping_values():
    with pytest.raises(ValueError, match="escape"):
        gen_multiscale(Rng(1), 10, noise_halfwidth=0.25)


def test_multiscale_switch_positions_match_latents():
    stream = gen_multiscale(Rng(8), 100)
    for k in range(3):
        manual = np.nonzero(stream.latent_states[k][1:]
                            != stream.latent_states[k][:-1])[0] + 1
        assert np.array_equal(stream.switch_positions(k), manual)


# --- splitting ------------------------------------------------------------------

def test_split_sizes_and_disjointness():
    ds = gen_low_overlap(Rng(1), 4, 100, 16, 0.1)
    train, test = train_test_split(Rng(2), ds)
    assert len(test) == 80 and len(train) == 320
    joined = np.concatenate([np.sort(train.samples[:, 0]),
                             np.sort(test.samples[:, 0])])
    assert len(np.unique(joined)) == len(joined)  # noise makes values distinct


def test_split_deterministic():
    ds = gen_low_overlap(Rng(1), 4, 100, 16, 0.1)
    a = train_test_split(Rng(2), ds)
    b = train_test_split(Rng(2), ds)
    assert np.array_equal(a[0].samples, b[0].samples)
    assert np.array_equal(a[1].labels, b[1].labels)


# --- IDX parsing ------------------------------------------------------------------

def _write_zero_fixture(tmp_path):
    images = tmp_path / "imgs"
    labels = tmp_path / "lbls"
    images.write_bytes(struct.pack(">IIII", 0x00000803, 2, 2, 2) + bytes(8))
    labels.write_bytes(struct.pack(">II", 0x00000801, 2) + bytes([3, 9]))
    return images, labels


def test_idx_zero_fixture(tmp_path):
    images, labels = _write_zero_fixture(tmp_path)
    ds = load_idx(images, labels)
    assert len(ds) == 2
    assert ds.feature_dim == 4
    assert np.array_equal(ds.samples, np.zeros((2, 4)))
    assert ds.labels.tolist() == [3, 9]


def test_idx_wrong_magic(tmp_path):
    images, labels = _write_zero_fixture(tmp_path)
    with pytest.raises(IdxFormatError, match="magic"):
        load_idx(labels, labels)


def test_idx_round_trip(tmp_path):
    r = np.random.default_rng(3)
    samples = r.integers(0, 256, (5, 6)).astype(np.float64) / 255.0
    ds = Dataset(samples, np.arange(5) % 3, "t", 6, 3)
    write_idx(ds, tmp_path / "i", tmp_path / "l", rows=2, cols=3)
    back = load_idx(tmp_path / "i", tmp_path / "l")
    assert np.allclose(back.samples, ds.samples)
    assert np.array_equal(back.labels, ds.labels)


@pytest.mark.mnist
def test_mnist_train_headers(mnist_dir):
    ds = load_idx(mnist_dir / "train-images-idx3-ubyte",
                  mnist_dir / "train-labels-idx1-ubyte")
    assert len(ds) == 60000
    assert ds.feature_dim == 784
    assert ds.num_categories == 10


# --- CSV round trip ------------------------------------------------------------

def test_dataset_csv_round_trip(tmp_path):
    ds = gen_low_overlap(Rng(7), 3, 4, 6, 0.2)
    path = tmp_path / "ds.csv"
    save_dataset_csv(ds, path)
    header = path.read_text().splitlines()[0]
    assert header == "f0,f1,f2,f3,f4,f5,label"
    back = load_dataset_csv(path)
    assert np.array_equal(back.samples, ds.samples)
    assert np.array_equal(back.labels, ds.labels)
    assert back.num_categories == ds.num_categories


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**4), ncat=st.integers(2, 5),
       items=st.integers(1, 20))
def test_low_overlap_label_blocks(seed, ncat, items):
    ds = gen_low_overlap(Rng(seed), ncat, items, 5 * ncat, 0.1)
    assert np.all(np.bincount(ds.labels, minlength=ncat) == items)
    assert np.all(ds.samples >= 0.0) and np.all(ds.samples <= 1.0)
