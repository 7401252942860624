"""Times the numba and numpy kernel backends on the same training work.

Two workloads, both seeded and identical across backends: a leaky
gated dense model trained sample-by-sample on the low-overlap stream,
and an LSTM trained window-by-window on the same data. The numba
backend is warmed up before timing so compilation cost is reported
separately. Trajectories must agree across backends to ~1e-10; the
script exits nonzero if they drift.

Usage: python benchmarks/bench_backends.py [--reps 5]
"""
import argparse
import sys
import time

import numpy as np

from tempolearn.backend import available_backends, get_kernels
from tempolearn.datasets import gen_low_overlap, train_test_split
from tempolearn.lstm import LstmSpec, init_lstm, train_lstm
from tempolearn.models import ModelSpec, init_state
from tempolearn.numerics import Rng
from tempolearn.optim import OptimizerState
from tempolearn.sampling import (k_repetition_schedule, random_schedule,
                                 shared_within_category_orders)
from tempolearn.training import TrainConfig, train_incremental


def build_workload(seed=1):
    master = Rng(seed)
    ds = gen_low_overlap(master.spawn(0), 4, 600, 16, 0.8)
    train_ds, test_ds = train_test_split(master.spawn(1), ds)
    cats = np.tile(master.spawn(2).permutation(4), len(train_ds) // 4 // 5)
    within = shared_within_category_orders(train_ds, master.spawn(3))
    sched = k_repetition_schedule(train_ds, cats, within, 5)
    return master, train_ds, test_ds, sched


def run_dense(master, train_ds, test_ds, sched, backend):
    spec = ModelSpec(16, 8, 4, leak_alphas=0.5, gating="label_reset")
    state = init_state(spec, master.spawn(10))
    cfg = TrainConfig(epochs=1, eval_every=50, backend=backend)
    curve = train_incremental(spec, state, train_ds, sched, test_ds,
                              OptimizerState("rmsprop", 0.003), cfg)
    return curve.test_losses()


def run_lstm(master, train_ds, test_ds, backend):
    spec = LstmSpec(16, 8, 4, window_length=10)
    state = init_lstm(spec, master.spawn(20))
    sched = random_schedule(train_ds, master.spawn(21))
    cfg = TrainConfig(epochs=1, eval_every=200, backend=backend)
    curve = train_lstm(spec, state, train_ds, sched, test_ds,
                       OptimizerState("rmsprop", 0.003), cfg)
    return curve.test_losses()


def time_reps(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), sum(times) / len(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "numba" in backends:
        t0 = time.perf_counter()
        get_kernels("numba")
        master, train_ds, test_ds, sched = build_workload()
        run_dense(master, train_ds, test_ds, sched, "numba")
        run_lstm(master, train_ds, test_ds, "numba")
        print(f"numba warmup (jit compile): {time.perf_counter() - t0:.1f}s")

    results = {}
    traces = {}
    for name in backends:
        for label, fn in [
            ("dense", lambda b=name: run_dense(*build_workload(), b)),
            ("lstm", lambda b=name: (lambda m, tr, te, _s: run_lstm(m, tr, te, b))(*build_workload())),
        ]:
            best, mean = time_reps(fn, args.reps)
            results[(label, name)] = (best, mean)
            traces[(label, name)] = fn()
            print(f"{label:6s} {name:6s} best {best * 1e3:8.1f} ms   "
                  f"mean {mean * 1e3:8.1f} ms")

    ok = True
    for label in ("dense", "lstm"):
        if len(backends) == 2:
            a, b = traces[(label, "numba")], traces[(label, "numpy")]
            agree = np.allclose(a, b, rtol=0, atol=1e-10)
            ok &= agree
            print(f"{label:6s} trajectory agreement (atol 1e-10): "
                  f"{'ok' if agree else 'DRIFT'}")
            speed = results[(label, "numpy")][0] / results[(label, "numba")][0]
            print(f"{label:6s} numba speedup over numpy: {speed:.1f}x")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
