"""Incremental and mini-batch trainers: curves, cadence, order effects."""
import math

import numpy as np
import pytest

from tempolearn.datasets import Dataset, gen_low_overlap, train_test_split
from tempolearn.metrics import per_feature_error
from tempolearn.models import ModelSpec, init_state
from tempolearn.numerics import Rng
from tempolearn.optim import OptimizerState
from tempolearn.sampling import (k_repetition_schedule, random_schedule,
                                 shared_within_category_orders)
from tempolearn.training import (CURVE_COLUMNS, TrainConfig, batch_label_sets,
                                 evaluate, load_curves_csv, save_curves_csv,
                                 train_incremental, train_minibatch)


def _split(seed=1, items=300, noise=0.8):
    master = Rng(seed)
    ds = gen_low_overlap(master.spawn(0), 4, items, 16, noise)
    return master, *train_test_split(master.spawn(1), ds)


def _k_sched(ds, k, rng_cat, rng_within):
    cats = np.tile(rng_cat.permutation(4), -(-len(ds) // (4 * k)))
    within = shared_within_category_orders(ds, rng_within)
    return k_repetition_schedule(ds, cats, within, k)


def _end_mean(curve, n, window=300):
    pts = [p.test_loss for p in curve.points if p.samples_seen >= n - window]
    return float(np.mean(pts))


def _run_leg(spec, master, train_ds, test_ds, r, k, opt, eval_mode="stateless"):
    sched = _k_sched(train_ds, k, master.spawn(2000 + r), master.spawn(3000 + r))
    test_order = None
    if eval_mode == "ordered":
        test_order = _k_sched(test_ds, k, master.spawn(5000 + r),
                              master.spawn(6000 + r)).order
    state = init_state(spec, master.spawn(1000 + r))
    cfg = TrainConfig(epochs=1, eval_every=10, eval_mode=eval_mode)
    return train_incremental(spec, state, train_ds, sched, test_ds,
                             opt.clone_fresh(), cfg, run=r,
                             test_order=test_order)


# --- orderings ------------------------------------------------------------------

def test_feedforward_prefers_minimum_smoothness():
    spec = ModelSpec(16, 8, 4)
    opt = OptimizerState("sgd", 0.3)
    ends = {}
    for k in (1, 5):
        master, train_ds, test_ds = _split()
        vals = [_end_mean(_run_leg(spec, master, train_ds, test_ds, r, k, opt),
                          len(train_ds)) for r in range(3)]
        ends[k] = np.mean(vals)
    assert ends[1] < ends[5]


def test_gated_memory_prefers_smoothness():
    spec = ModelSpec(16, 8, 4, leak_alphas=0.5, gating="label_reset")
    opt = OptimizerState("rmsprop", 0.003)
    ends = {}
    for k in (1, 5):
        master, train_ds, test_ds = _split()
        vals = [_end_mean(_run_leg(spec, master, train_ds, test_ds, r, k, opt,
                                   eval_mode="ordered"), len(train_ds))
                for r in range(3)]
        ends[k] = np.mean(vals)
    assert ends[5] < ends[1]


# --- trainer mechanics ------------------------------------------------------------

def test_zero_epochs_yields_initial_point_only():
    master, train_ds, test_ds = _split(items=20)
    spec = ModelSpec(16, 8, 4)
    state = init_state(spec, master.spawn(10))
    sched = random_schedule(train_ds, master.spawn(11))
    curve = train_incremental(spec, state, train_ds, sched, test_ds,
                              OptimizerState("sgd", 0.1),
                              TrainConfig(epochs=0))
    assert len(curve.points) == 1
    assert curve.points[0].iteration == 0
    assert math.isnan(curve.points[0].train_loss)


def test_eval_cadence():
    master, train_ds, test_ds = _split(items=20)   # 64 training samples
    spec = ModelSpec(16, 8, 4)
    state = init_state(spec, master.spawn(10))
    sched = random_schedule(train_ds, master.spawn(11))
    curve = train_incremental(spec, state, train_ds, sched, test_ds,
                              OptimizerState("sgd", 0.1),
                              TrainConfig(epochs=1, eval_every=25))
    assert [p.samples_seen for p in curve.points] == [0, 25, 50, 64]


def test_incremental_deterministic():
    def go():
        master, train_ds, test_ds = _split(items=30)
        spec = ModelSpec(16, 8, 4, leak_alphas=0.5, gating="label_reset")
        state = init_state(spec, master.spawn(10))
        sched = _k_sched(train_ds, 5, master.spawn(11), master.spawn(12))
        train_incremental(spec, state, train_ds, sched, test_ds,
                          OptimizerState("rmsprop", 0.003),
                          TrainConfig(epochs=2, eval_every=40))
        return state
    a, b = go(), go()
    assert np.array_equal(a.W_ih, b.W_ih)
    assert np.array_equal(a.W_ho, b.W_ho)


def test_periodic_reset_every_trial_equals_feedforward():
    # resetting on every trial turns the leak off and restores the full
    # gradient scale, so the trajectory must match the memoryless model's
    master, train_ds, test_ds = _split(items=30)
    leaky = ModelSpec(16, 8, 4, leak_alphas=0.5)
    ff = ModelSpec(16, 8, 4)
    sched = random_schedule(train_ds, master.spawn(11))
    s1 = init_state(leaky, master.spawn(10))
    s2 = s1.clone()
    train_incremental(leaky, s1, train_ds, sched, test_ds,
                      OptimizerState("sgd", 0.1),
                      TrainConfig(epochs=1, reset_period=1))
    train_incremental(ff, s2, train_ds, sched, test_ds,
                      OptimizerState("sgd", 0.1), TrainConfig(epochs=1))
    assert np.array_equal(s1.W_ih, s2.W_ih)
    assert np.array_equal(s1.W_ho, s2.W_ho)


def test_schedule_length_must_match():
    master, train_ds, test_ds = _split(items=20)
    short = random_schedule(test_ds, master.spawn(11))
    spec = ModelSpec(16, 8, 4)
    with pytest.raises(ValueError, match="schedule"):
        train_incremental(spec, init_state(spec, master.spawn(10)), train_ds,
                          short, test_ds, OptimizerState("sgd", 0.1),
                          TrainConfig())


# --- mini-batch trainer -----------------------------------------------------------

def _pair_dataset(per_cat=12, seed=3):
    ds = gen_low_overlap(Rng(seed), 2, per_cat, 8, 0.3)
    return ds


def _order_schedule(ds, positions):
    from tempolearn.sampling import Schedule, compute_boundary_flags
    order = np.asarray(positions, dtype=np.int64)
    return Schedule(order, compute_boundary_flags(ds.labels[order]),
                    "handmade", None, None)


def test_batch_order_within_batch_is_irrelevant():
    ds = _pair_dataset()
    test_ds = _pair_dataset(seed=4)
    a_idx = np.nonzero(ds.labels == 0)[0][:3]
    b_idx = np.nonzero(ds.labels == 1)[0][:3]
    interleaved = np.ravel(np.column_stack([a_idx, b_idx]))
    blocked = np.concatenate([a_idx, b_idx])
    rest = np.setdiff1d(np.arange(len(ds)), interleaved)
    spec = ModelSpec(8, 4, 2)
    results = []
    for head in (interleaved, blocked):
        sched = _order_schedule(ds, np.concatenate([head, rest]))
        state = init_state(spec, Rng(9))
        train_minibatch(spec, state, ds, sched, test_ds,
                        OptimizerState("sgd", 0.1),
                        TrainConfig(epochs=1, batch_size=6))
        results.append(state)
    assert np.array_equal(results[0].W_ih, results[1].W_ih)
    assert np.array_equal(results[0].W_ho, results[1].W_ho)


def test_batch_one_equals_incremental():
    master, train_ds, test_ds = _split(items=20)
    spec = ModelSpec(16, 8, 4)
    sched = random_schedule(train_ds, master.spawn(11))
    s1 = init_state(spec, master.spawn(10))
    s2 = s1.clone()
    for opt_kind in ("sgd", "rmsprop"):
        a = s1.clone()
        b = s2.clone()
        train_incremental(spec, a, train_ds, sched, test_ds,
                          OptimizerState(opt_kind, 0.05),
                          TrainConfig(epochs=1, eval_every=16))
        train_minibatch(spec, b, train_ds, sched, test_ds,
                        OptimizerState(opt_kind, 0.05),
                        TrainConfig(epochs=1, eval_every=16, batch_size=1))
        assert np.array_equal(a.W_ih, b.W_ih)
        assert np.array_equal(a.W_ho, b.W_ho)


def test_batch16_with_16_repetition_is_single_category():
    ds = gen_low_overlap(Rng(1), 4, 64, 16, 0.1)
    within = shared_within_category_orders(ds, Rng(2))
    sched = k_repetition_schedule(ds, Rng(3).permutation(4), within, 16)
    for labels in batch_label_sets(ds, sched, 16):
        assert len(labels) == 1


def test_minibatch_rejects_leaky_specs():
    master, train_ds, test_ds = _split(items=10)
    spec = ModelSpec(16, 8, 4, leak_alphas=0.5)
    with pytest.raises(ValueError, match="feedforward"):
        train_minibatch(spec, init_state(spec, master.spawn(10)), train_ds,
                        random_schedule(train_ds, master.spawn(11)), test_ds,
                        OptimizerState("sgd", 0.1),
                        TrainConfig(batch_size=4))


# --- evaluation -----------------------------------------------------------------

def test_evaluate_perfect_predictions():
    # identity-like model: output weights copy a perfect hidden code
    ds = Dataset(np.eye(3), np.arange(3), "id", 3, 3)
    spec = ModelSpec(3, 3, 3, use_bias=False, output_activation="softmax",
                     loss="mse")
    state = init_state(spec, Rng(1))
    state.W_ih = np.eye(3) * 50.0
    state.W_ho = np.eye(3) * 50.0
    res = evaluate(spec, state, ds, "stateless")
    assert res.accuracy == 1.0
    assert res.loss < 1e-6


def test_evaluate_uniform_outputs_chance_accuracy():
    r = Rng(5)
    samples = r.uniform(0, 1, (200, 4))
    labels = np.tile(np.arange(10), 20)
    ds = Dataset(samples, labels, "balanced", 4, 10)
    spec = ModelSpec(4, 3, 10)
    state = init_state(spec, Rng(1))
    state.W_ih[:] = 0.0
    state.b_ih[:] = 0.0
    state.W_ho[:] = 0.0
    state.b_ho[:] = 0.0
    res = evaluate(spec, state, ds, "stateless")
    assert abs(res.accuracy - 0.1) < 1e-12   # ties resolve to class 0


def test_autoencoder_identity_zero_feature_error():
    outputs = Rng(2).uniform(0, 1, (50, 6))
    err = per_feature_error(outputs, outputs,
                            [np.arange(0, 2), np.arange(2, 4),
                             np.arange(4, 6)])
    assert np.array_equal(err, np.zeros(3))


# --- curve serialization -----------------------------------------------------------

def test_curves_csv_round_trip(tmp_path):
    master, train_ds, test_ds = _split(items=20)
    spec = ModelSpec(16, 8, 4)
    state = init_state(spec, master.spawn(10))
    sched = random_schedule(train_ds, master.spawn(11))
    curve = train_incremental(spec, state, train_ds, sched, test_ds,
                              OptimizerState("sgd", 0.1),
                              TrainConfig(epochs=1, eval_every=20),
                              run=3, condition="demo")
    path = tmp_path / "curves.csv"
    save_curves_csv(path, [curve])
    assert path.read_text().splitlines()[0] == ",".join(CURVE_COLUMNS)
    back = load_curves_csv(path)
    assert len(back) == 1
    assert back[0].run == 3 and back[0].condition == "demo"
    assert np.array_equal(back[0].test_losses(), curve.test_losses())
    got = [(p.iteration, p.samples_seen) for p in back[0].points]
    want = [(p.iteration, p.samples_seen) for p in curve.points]
    assert got == want
