"""Seeded randomness and activation primitives."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempolearn.numerics import (Rng, check_finite, relu, relu_deriv,
                                 seeded_permutation, sigmoid, softmax,
                                 xavier_init)


def test_xavier_entries_within_bound():
    W = xavier_init(Rng(7), 784, 392)
    bound = math.sqrt(6.0 / (784 + 392))
    assert W.shape == (392, 784)
    assert np.all(np.abs(W) <= bound)


def test_xavier_deterministic():
    a = xavier_init(Rng(7), 784, 392)
    b = xavier_init(Rng(7), 784, 392)
    assert np.array_equal(a, b)


def test_xavier_single_entry_bound():
    W = xavier_init(Rng(7), 1, 1)
    assert W.shape == (1, 1)
    assert abs(W[0, 0]) <= math.sqrt(3.0)


def test_relu_clamps_negatives():
    assert np.array_equal(relu(np.array([-1.0, 0.0, 2.0])),
                          np.array([0.0, 0.0, 2.0]))
    assert np.array_equal(relu(np.zeros(2)), np.zeros(2))
    assert np.array_equal(relu(np.array([5.5])), np.array([5.5]))


def test_relu_deriv_is_step():
    d = relu_deriv(np.array([-3.0, 0.0, 4.0]))
    assert np.array_equal(d[[0, 2]], [0.0, 1.0])


def test_softmax_uniform_on_equal_logits():
    assert np.allclose(softmax(np.zeros(2)), [0.5, 0.5])


def test_softmax_large_logits_no_overflow():
    y = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(y))
    assert y[0] > 0.999 and y[1] < 0.001


def test_softmax_log_ratio():
    y = softmax(np.array([math.log(1.0), math.log(3.0)]))
    assert np.allclose(y, [0.25, 0.75])


def test_sigmoid_midpoint_and_symmetry():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    x = np.array([1.7])
    assert np.allclose(sigmoid(x) + sigmoid(-x), 1.0)


def test_sigmoid_large_input_no_overflow():
    y = sigmoid(np.array([40.0, -40.0]))
    assert np.all(np.isfinite(y))
    assert y[0] > 0.999999 and y[1] < 1e-6


def test_seeded_permutation_is_permutation():
    p = seeded_permutation(Rng(11), 3)
    assert sorted(p.tolist()) == [0, 1, 2]


def test_seeded_permutation_singleton():
    assert seeded_permutation(Rng(4), 1).tolist() == [0]


def test_seeded_permutation_repeatable():
    a = seeded_permutation(Rng(9), 5)
    b = seeded_permutation(Rng(9), 5)
    assert np.array_equal(a, b)


def test_spawn_same_key_same_stream():
    master = Rng(3)
    a = master.spawn(42).uniform(0, 1, 10)
    b = master.spawn(42).uniform(0, 1, 10)
    assert np.array_equal(a, b)


def test_spawn_different_keys_differ():
    master = Rng(3)
    a = master.spawn(1).uniform(0, 1, 10)
    b = master.spawn(2).uniform(0, 1, 10)
    assert not np.array_equal(a, b)


def test_spawn_independent_of_parent_consumption():
    m1 = Rng(3)
    m1.uniform(0, 1, 100)
    m2 = Rng(3)
    assert np.array_equal(m1.spawn(7).uniform(0, 1, 5),
                          m2.spawn(7).uniform(0, 1, 5))


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        Rng(-1)


def test_check_finite_raises_on_nan():
    with pytest.raises(FloatingPointError, match="W_ih"):
        check_finite("W_ih", np.array([1.0, np.nan]))
    check_finite("ok", np.array([1.0, 2.0]))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 200))
def test_permutation_property(seed, n):
    p = seeded_permutation(Rng(seed), n)
    assert np.array_equal(np.sort(p), np.arange(n))


@settings(max_examples=50, deadline=None)
@given(x=st.lists(st.floats(-50, 50), min_size=1, max_size=20))
def test_softmax_simplex_property(x):
    y = softmax(np.array(x))
    assert np.all(y >= 0)
    assert math.isclose(float(y.sum()), 1.0, rel_tol=1e-9)
