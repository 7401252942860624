"""Leaky-memory forward pass, gating, and the frozen-history backward pass.

The backward pass treats the previous hidden state as a constant, so its
finite-difference oracle perturbs parameters while holding H_prev fixed at
the value the forward pass saw.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempolearn.datasets import gen_multiscale
from tempolearn.models import (ModelSpec, ModelState, backward_leak_unaware,
                               forward, init_state, input_gate, label_gate,
                               load_checkpoint, multiscale_autoencoder,
                               predict, reset_matrix, save_checkpoint,
                               trial_loss)
from tempolearn.numerics import Rng, relu


def _rand_state(spec, seed):
    state = init_state(spec, Rng(seed))
    state.H_prev = Rng(seed + 1).uniform(0.0, 1.0, spec.hidden_dim)
    return state


# --- forward arithmetic -------------------------------------------------------

def test_all_zero_alphas_is_feedforward():
    spec = ModelSpec(6, 4, 3, leak_alphas=0.0)
    state = _rand_state(spec, 1)
    x = Rng(3).uniform(0, 1, 6)
    trace = forward(spec, state, x)
    assert np.array_equal(trace.hidden, relu(state.W_ih @ x + state.b_ih))


def test_half_leak_mixes_previous_state():
    spec = ModelSpec(2, 2, 2, leak_alphas=0.5, use_bias=False)
    state = ModelState(W_ih=np.array([[-1.0, 0.0], [0.0, 2.0]]),
                       b_ih=np.zeros(2), W_ho=np.eye(2), b_ho=np.zeros(2),
                       H_prev=np.array([1.0, 0.0]))
    trace = forward(spec, state, np.array([1.0, 1.0]))
    # instantaneous = relu([-1, 2]) = [0, 2]; H = 0.5*[1,0] + 0.5*[0,2]
    assert np.array_equal(trace.instantaneous, [0.0, 2.0])
    assert np.array_equal(trace.hidden, [0.5, 1.0])


def test_reset_equals_zero_alpha():
    spec = ModelSpec(5, 4, 3, leak_alphas=0.6)
    ff = ModelSpec(5, 4, 3, leak_alphas=0.0)
    x = Rng(9).uniform(0, 1, 5)
    a = _rand_state(spec, 2)
    b = a.clone()
    t_reset = forward(spec, a, x, reset=True)
    t_ff = forward(ff, b, x)
    assert np.array_equal(t_reset.hidden, t_ff.hidden)
    assert np.array_equal(t_reset.output, t_ff.output)


def test_per_unit_reset_flags():
    spec = ModelSpec(3, 2, 2, leak_alphas=(0.5, 0.5), use_bias=False)
    state = ModelState(W_ih=np.ones((2, 3)), b_ih=np.zeros(2),
                       W_ho=np.eye(2), b_ho=np.zeros(2),
                       H_prev=np.array([4.0, 4.0]))
    trace = forward(spec, state, np.ones(3), reset=np.array([True, False]))
    assert trace.hidden[0] == 3.0          # unit 0 reset: pure relu(3)
    assert trace.hidden[1] == 3.5          # unit 1 leaks: 0.5*4 + 0.5*3


def test_forward_advances_state():
    spec = ModelSpec(3, 2, 2, leak_alphas=0.5)
    state = _rand_state(spec, 4)
    trace = forward(spec, state, np.full(3, 0.5))
    assert np.array_equal(state.H_prev, trace.hidden)
    assert state.trial_count == 1


def test_spec_validation():
    with pytest.raises(ValueError, match="leak_alphas has 2 entries"):
        ModelSpec(4, 3, 2, leak_alphas=(0.1, 0.2))
    with pytest.raises(ValueError, match="outside"):
        ModelSpec(4, 3, 2, leak_alphas=1.0)
    with pytest.raises(ValueError, match="gating"):
        ModelSpec(4, 3, 2, gating="sometimes")


# --- gating -------------------------------------------------------------------

def test_label_gate_cases():
    assert label_gate(3, 3) is False
    assert label_gate(3, 7) is True
    assert label_gate(None, 7) is True


def test_input_gate_jump_vs_steady():
    spec = multiscale_autoencoder(input_dim=2, hidden_dim=1,
                                  leak_alphas=(0.5,), gating="input_reset")
    jump = input_gate(spec, np.array([0.2, 0.2]), np.array([0.8, 0.8]))
    steady = input_gate(spec, np.array([0.8, 0.8]), np.array([0.8, 0.8]))
    assert jump.tolist() == [True]
    assert steady.tolist() == [False]


def test_input_gate_tracks_slow_latent_switches():
    # ground truth: the generator's latent switch positions
    spec = multiscale_autoencoder(gating="input_reset")
    for seed in range(1, 6):
        stream = gen_multiscale(Rng(seed), 600, noise_halfwidth=0.05)
        R = reset_matrix(spec, stream.samples)
        switches = np.zeros(len(stream), dtype=bool)
        switches[stream.switch_positions(2)] = True
        resets = R[:, 2].astype(bool)
        agree = np.mean(resets[1:] == switches[1:])
        assert agree >= 0.95


def test_reset_matrix_label_gating():
    spec = ModelSpec(4, 3, 2, leak_alphas=0.5, gating="label_reset")
    X = np.zeros((5, 4))
    labels = np.array([1, 1, 0, 0, 1])
    R = reset_matrix(spec, X, labels_in_order=labels)
    assert R[:, 0].tolist() == [1.0, 0.0, 1.0, 0.0, 1.0]
    assert np.all(R == R[:, :1])           # every unit gets the same flag


def test_reset_matrix_periodic():
    spec = ModelSpec(4, 3, 2, leak_alphas=0.5)
    R = reset_matrix(spec, np.zeros((7, 4)), reset_period=3)
    assert R[:, 0].tolist() == [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]


# --- frozen-history gradients vs central finite differences --------------------

def _fd_check(spec, seed, reset=False, tol=1e-5):
    state = _rand_state(spec, seed)
    x = Rng(seed + 2).uniform(0.05, 0.95, spec.input_dim)
    target = np.zeros(spec.output_dim)
    target[int(Rng(seed + 3).integers(0, spec.output_dim))] = 1.0
    H0 = state.H_prev.copy()

    probe = state.clone()
    trace = forward(spec, probe, x, reset=reset)
    grads = backward_leak_unaware(spec, probe, trace, target)

    def loss_at(params):
        s = ModelState(params["W_ih"], params["b_ih"], params["W_ho"],
                       params["b_ho"], H0.copy())
        t = forward(spec, s, x, reset=reset)
        return trial_loss(spec, t.output, target)

    base = {n: p.copy() for n, p in state.params().items()}
    h = 1e-6
    for name, g in grads.items():
        fd = np.zeros_like(g)
        flat = base[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_at(base)
            flat[i] = orig - h
            down = loss_at(base)
            flat[i] = orig
            fd.reshape(-1)[i] = (up - down) / (2 * h)
        scale = max(np.max(np.abs(fd)), np.max(np.abs(g)), 1e-8)
        assert np.max(np.abs(fd - g)) / scale < tol, \
            f"{name}: analytic and finite-difference gradients disagree"


@pytest.mark.parametrize("alpha", [0.0, 0.3, 0.5, 0.6])
def test_gradients_match_frozen_history_surrogate(alpha):
    spec = ModelSpec(5, 4, 3, leak_alphas=alpha)
    _fd_check(spec, seed=10)


def test_gradients_softmax_mse_jacobian():
    # softmax + MSE routes the full Jacobian through the output delta
    spec = ModelSpec(4, 3, 4, leak_alphas=0.5, output_activation="softmax",
                     loss="mse")
    _fd_check(spec, seed=20)


def test_gradients_ce_loss():
    spec = ModelSpec(4, 3, 4, leak_alphas=0.3, loss="ce")
    _fd_check(spec, seed=30)


def test_gradients_sigmoid_output():
    spec = ModelSpec(6, 3, 6, leak_alphas=0.5, output_activation="sigmoid",
                     loss="mse")
    _fd_check(spec, seed=40)


def test_gradients_under_reset():
    spec = ModelSpec(5, 4, 3, leak_alphas=0.6)
    _fd_check(spec, seed=50, reset=True)


def test_gradients_no_bias():
    spec = ModelSpec(5, 4, 3, leak_alphas=0.5, use_bias=False)
    state = _rand_state(spec, 60)
    x = Rng(62).uniform(0.05, 0.95, 5)
    trace = forward(spec, state, x)
    grads = backward_leak_unaware(spec, state, trace, np.array([1.0, 0, 0]))
    assert set(grads.keys()) == {"W_ih", "W_ho"}


def test_stale_trace_rejected():
    spec = ModelSpec(3, 2, 2, leak_alphas=0.5)
    state = _rand_state(spec, 70)
    trace = forward(spec, state, np.full(3, 0.4))
    forward(spec, state, np.full(3, 0.6))
    with pytest.raises(ValueError, match="stale"):
        backward_leak_unaware(spec, state, trace, np.array([1.0, 0.0]))


# --- prediction paths -----------------------------------------------------------

def test_stateless_prediction_repeatable():
    spec = ModelSpec(6, 4, 3, leak_alphas=0.5)
    state = _rand_state(spec, 80)
    X = Rng(81).uniform(0, 1, (10, 6))
    a, _ = predict(spec, state, X, "stateless")
    b, _ = predict(spec, state, X, "stateless")
    assert np.array_equal(a, b)


def test_zero_alpha_ordered_equals_stateless():
    spec = ModelSpec(6, 4, 3, leak_alphas=0.0)
    state = _rand_state(spec, 82)
    X = Rng(83).uniform(0, 1, (10, 6))
    a, _ = predict(spec, state, X, "stateless")
    b, _ = predict(spec, state, X, "ordered",
                   reset=np.zeros((10, spec.hidden_dim)))
    assert np.allclose(a, b, atol=1e-12)


def test_all_reset_ordered_equals_stateless():
    spec = ModelSpec(6, 4, 3, leak_alphas=0.7, gating="label_reset")
    state = _rand_state(spec, 84)
    X = Rng(85).uniform(0, 1, (12, 6))
    a, _ = predict(spec, state, X, "stateless")
    b, _ = predict(spec, state, X, "ordered",
                   reset=np.ones((12, spec.hidden_dim)))
    assert np.array_equal(a, b)


def test_predict_leaves_state_untouched():
    spec = ModelSpec(6, 4, 3, leak_alphas=0.5)
    state = _rand_state(spec, 86)
    before = state.H_prev.copy()
    predict(spec, state, Rng(87).uniform(0, 1, (5, 6)), "ordered")
    assert np.array_equal(state.H_prev, before)
    assert state.trial_count == 0


# --- structural helpers -----------------------------------------------------------

def test_multiscale_autoencoder_monitor_blocks():
    spec = multiscale_autoencoder()
    assert spec.input_monitor == ((0, 1), (2, 3), (4, 5))
    with pytest.raises(ValueError, match="evenly"):
        multiscale_autoencoder(input_dim=7, hidden_dim=3)


def test_checkpoint_round_trip(tmp_path):
    spec = ModelSpec(6, 4, 3, leak_alphas=0.5)
    state = _rand_state(spec, 90)
    forward(spec, state, Rng(91).uniform(0, 1, 6))
    save_checkpoint(state, tmp_path / "ckpt.csv")
    back = load_checkpoint(tmp_path / "ckpt.csv", spec)
    for name in ("W_ih", "b_ih", "W_ho", "b_ho", "H_prev"):
        assert np.array_equal(getattr(back, name), getattr(state, name))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**4), alpha=st.floats(0.0, 0.95), n=st.integers(2, 30))
def test_hidden_stays_bounded(seed, alpha, n):
    # H is a convex mix of its past and relu(Wx), so it can never exceed the
    # largest instantaneous response seen so far
    spec = ModelSpec(4, 3, 2, leak_alphas=alpha)
    state = init_state(spec, Rng(seed))
    X = Rng(seed + 1).uniform(0, 1, (n, 4))
    peak = np.zeros(3)
    for i in range(n):
        trace = forward(spec, state, X[i])
        peak = np.maximum(peak, trace.instantaneous)
        assert np.all(trace.hidden <= peak + 1e-12)
        assert np.all(trace.hidden >= 0.0)
