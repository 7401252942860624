"""Optimizer updates and order-invariant gradient averaging."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempolearn.optim import (GradientAccumulator, OptimizerState,
                              accumulate_and_flush, canonical_mean, step)


def _params(value=1.0):
    return {"w": np.array([value])}


def test_sgd_zero_gradient_no_change():
    opt = OptimizerState("sgd", 0.01)
    p = _params(1.0)
    step(opt, p, {"w": np.zeros(1)})
    assert p["w"][0] == 1.0


def test_sgd_arithmetic():
    opt = OptimizerState("sgd", 0.01)
    p = _params(1.0)
    step(opt, p, {"w": np.array([2.0])})
    assert math.isclose(p["w"][0], 0.98, rel_tol=1e-12)


def test_sgd_two_steps_equal_summed_grads():
    g = np.array([0.7, -0.2])
    a = {"w": np.ones(2)}
    b = {"w": np.ones(2)}
    opt = OptimizerState("sgd", 0.05)
    step(opt, a, {"w": g})
    step(opt, a, {"w": g})
    step(OptimizerState("sgd", 0.05), b, {"w": 2 * g})
    assert np.allclose(a["w"], b["w"])


def test_rmsprop_first_step_recurrence():
    opt = OptimizerState("rmsprop", 0.01, beta1=0.9, beta2=0.99, epsilon=1e-8)
    g = 3.0
    p = _params(1.0)
    step(opt, p, {"w": np.array([g])})
    v = (1 - 0.99) * g * g
    m = (1 - 0.9) * g / (math.sqrt(v) + 1e-8)
    assert math.isclose(opt.second_moment["w"][0], v, rel_tol=1e-12)
    assert math.isclose(opt.momentum["w"][0], m, rel_tol=1e-12)
    assert math.isclose(p["w"][0], 1.0 - 0.01 * m, rel_tol=1e-12)


@pytest.mark.parametrize("g", [2.0, -0.3])
def test_rmsprop_constant_gradient_limit(g):
    # recurrence oracle: v -> g^2, m -> g/(|g|+eps), so the step size
    # approaches lr * sign(g)
    opt = OptimizerState("rmsprop", 0.01)
    p = _params(0.0)
    prev = p["w"][0]
    for _ in range(3000):
        step(opt, p, {"w": np.array([g])})
        delta = p["w"][0] - prev
        prev = p["w"][0]
    assert math.isclose(abs(delta), 0.01, rel_tol=1e-6)
    assert math.copysign(1, -delta) == math.copysign(1, g)


def test_rmsprop_zero_gradients_from_scratch_no_change():
    opt = OptimizerState("rmsprop", 0.01)
    p = _params(1.0)
    for _ in range(10):
        step(opt, p, {"w": np.zeros(1)})
    assert p["w"][0] == 1.0


def test_rmsprop_accumulators_decay_toward_zero():
    opt = OptimizerState("rmsprop", 0.01)
    p = _params(1.0)
    step(opt, p, {"w": np.array([2.0])})
    v_prev = opt.second_moment["w"][0]
    m_prev = abs(opt.momentum["w"][0])
    for _ in range(500):
        step(opt, p, {"w": np.zeros(1)})
        assert opt.second_moment["w"][0] <= v_prev
        assert abs(opt.momentum["w"][0]) <= m_prev
        v_prev = opt.second_moment["w"][0]
        m_prev = abs(opt.momentum["w"][0])
    assert v_prev < 1e-3 and m_prev < 1e-12


def test_optimizer_validation():
    with pytest.raises(ValueError, match="kind"):
        OptimizerState("adamw")
    with pytest.raises(ValueError, match="learning_rate"):
        OptimizerState("sgd", 0.0)
    with pytest.raises(ValueError, match="betas"):
        OptimizerState("rmsprop", 0.01, beta1=1.0)


def test_clone_fresh_drops_accumulators():
    opt = OptimizerState("rmsprop", 0.01)
    step(opt, _params(), {"w": np.array([1.0])})
    fresh = opt.clone_fresh()
    assert fresh.second_moment == {}
    assert fresh.learning_rate == 0.01


def test_non_finite_gradient_rejected():
    opt = OptimizerState("sgd", 0.01)
    with pytest.raises(FloatingPointError, match="w"):
        step(opt, _params(), {"w": np.array([np.nan])})


# --- canonical (order-invariant) averaging --------------------------------------

def test_canonical_mean_single_row():
    g = np.array([[1.5, -2.0]])
    assert np.array_equal(canonical_mean(g), g[0])


def test_canonical_mean_cancellation():
    g = np.array([0.3, -1.7])
    stack = np.stack([g, -g])
    assert np.array_equal(canonical_mean(stack), np.zeros(2))


def test_canonical_mean_identical_rows():
    g = np.array([0.25, 1.0, -3.5])
    stack = np.tile(g, (16, 1))
    assert np.array_equal(canonical_mean(stack), g)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**4), rows=st.integers(2, 12))
def test_canonical_mean_order_invariant_bitwise(seed, rows):
    r = np.random.default_rng(seed)
    stack = r.normal(0, 1, (rows, 7))
    base = canonical_mean(stack)
    for _ in range(3):
        assert np.array_equal(canonical_mean(r.permutation(stack)), base)


def test_accumulator_flush_resets():
    acc = GradientAccumulator()
    out = accumulate_and_flush(acc, {"w": np.array([2.0])},
                               {"w": np.array([4.0])})
    assert out["w"][0] == 3.0
    assert acc.count == 0
    with pytest.raises(ValueError, match="empty"):
        acc.flush()
