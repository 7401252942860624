"""Training loops over schedules: incremental (one update per sample) and
mini-batch (order-invariant averaged gradients), with periodic evaluation
and curve recording.

Hidden state starts each epoch at zero. Evaluation never mutates training
state. All recorded numbers are fully determined by (seed, spec, config).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models, optim
from .backend import get_kernels
from .datasets import Dataset
from .numerics import check_finite
from .sampling import Schedule

OUT_ACT_CODE = {"softmax": 0, "sigmoid": 1}
LOSS_CODE = {"mse": 0, "ce": 1}

CURVE_COLUMNS = ("run", "condition", "iteration", "samples_seen",
                 "train_loss", "test_loss", "test_acc")


@dataclass
class TrainConfig:
    epochs: int = 1
    eval_every: int = 100
    eval_mode: str = "stateless"
    batch_size: int = 1
    record_hidden: bool = False
    reset_period: int | None = None    # extra periodic reset every m trials
    backend: str | None = None         # None = default backend

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.eval_mode not in ("stateless", "ordered"):
            raise ValueError(f"unknown eval_mode {self.eval_mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class CurvePoint:
    iteration: int
    samples_seen: int
    train_loss: float
    test_loss: float
    test_acc: float


@dataclass
class TrainCurve:
    run: int
    condition: str
    points: list[CurvePoint] = field(default_factory=list)
    hidden: np.ndarray | None = None   # last epoch's H(n) series, if recorded

    def iterations(self) -> np.ndarray:
        return np.array([p.iteration for p in self.points], dtype=np.int64)

    def test_losses(self) -> np.ndarray:
        return np.array([p.test_loss for p in self.points])

    def final_test_loss(self) -> float:
        return self.points[-1].test_loss


@dataclass
class EvalResult:
    loss: float
    accuracy: float                    # nan for autoencoders
    per_dim_mse: np.ndarray
    n: int
    hidden: np.ndarray | None = None

    def subcomponent_mse(self, slices) -> np.ndarray:
        return np.array([float(np.mean(self.per_dim_mse[s])) for s in slices])


def targets_for(spec: models.ModelSpec, dataset: Dataset) -> np.ndarray:
    """Training targets: one-hot labels for softmax outputs, the inputs
    themselves for sigmoid (reconstruction) outputs."""
    if dataset.feature_dim != spec.input_dim:
        raise ValueError(f"dataset feature dim {dataset.feature_dim} != "
                         f"model input dim {spec.input_dim}")
    if spec.output_activation == "softmax":
        if dataset.num_categories != spec.output_dim:
            raise ValueError(f"dataset has {dataset.num_categories} categories "
                             f"but model output dim is {spec.output_dim}")
        T = np.zeros((len(dataset), spec.output_dim))
        T[np.arange(len(dataset)), dataset.labels] = 1.0
        return T
    if spec.output_dim != spec.input_dim:
        raise ValueError("reconstruction targets need output_dim == input_dim")
    return dataset.samples


def _ordered_arrays(dataset: Dataset, order: np.ndarray | None):
    if order is None:
        order = np.arange(len(dataset), dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
        if order.ndim != 1 or len(order) == 0 or order.max() >= len(dataset) \
                or order.min() < 0:
            raise ValueError("order does not index the dataset")
    return order


def evaluate(spec: models.ModelSpec, state: models.ModelState,
             dataset: Dataset, eval_mode: str = "stateless",
             order: np.ndarray | None = None,
             backend: str | None = None,
             record_hidden: bool = False) -> EvalResult:
    """Mean loss, argmax accuracy (classifiers), and per-dimension MSE.

    stateless: every sample is an independent trial (memory reset).
    ordered: state evolves along the given order (default: dataset order)
    under the spec's gating; falls back to the stateless batched path when
    every position resets every unit, so the two modes then agree exactly.
    """
    if len(dataset) == 0:
        raise ValueError("empty evaluation set")
    T = targets_for(spec, dataset)
    X = dataset.samples
    is_classifier = spec.output_activation == "softmax"

    order = _ordered_arrays(dataset, order)
    if eval_mode == "ordered":
        reset = models.reset_matrix(spec, X[order], dataset.labels[order])
        if not np.all(reset == 1.0):
            kr = get_kernels(backend)
            sq_err = np.zeros(spec.output_dim)
            H_rec = np.empty((len(order), spec.hidden_dim)) if record_hidden \
                else np.empty((1, 1))
            loss, n_correct = kr.dense_ordered_eval(
                X, T, order, reset,
                state.W_ih, state.b_ih, state.W_ho, state.b_ho,
                spec.alphas_array,
                OUT_ACT_CODE[spec.output_activation], LOSS_CODE[spec.loss],
                1 if spec.use_bias else 0,
                sq_err, H_rec, 1 if record_hidden else 0)
            acc = n_correct / len(order) if is_classifier else math.nan
            return EvalResult(float(loss), acc, sq_err / len(order),
                              len(order), H_rec if record_hidden else None)
    elif eval_mode != "stateless":
        raise ValueError(f"unknown eval_mode {eval_mode!r}")

    Xo, To = X[order], T[order]
    Y, H = models.batched_forward(spec, state, Xo)
    diff = Y - To
    if spec.loss == "ce":
        p = np.maximum(Y[np.arange(len(order)), np.argmax(To, axis=1)], 1e-12)
        loss = float(np.mean(-np.log(p)))
    else:
        loss = float(np.mean(np.mean(diff * diff, axis=1)))
    acc = float(np.mean(np.argmax(Y, axis=1) == np.argmax(To, axis=1))) \
        if is_classifier else math.nan
    per_dim = np.sum(diff * diff, axis=0) / len(order)
    return EvalResult(loss, acc, per_dim, len(order),
                      H if record_hidden else None)


def _check_params_finite(state: models.ModelState, iteration: int) -> None:
    for name, arr in state.params().items():
        try:
            check_finite(name, arr)
        except FloatingPointError as e:
            raise FloatingPointError(f"{e} at iteration {iteration}") from None


def _opt_arrays(opt: optim.OptimizerState, state: models.ModelState):
    """Kernel-side optimizer buffers; dummies when SGD never reads them."""
    if opt.kind_code == optim.SGD:
        d2, d1 = np.zeros((1, 1)), np.zeros(1)
        return (d2, d1, d2, d1, d2, d1, d2, d1)
    vW_ih, mW_ih = opt.buffers_for("W_ih", state.W_ih.shape)
    vb_ih, mb_ih = opt.buffers_for("b_ih", state.b_ih.shape)
    vW_ho, mW_ho = opt.buffers_for("W_ho", state.W_ho.shape)
    vb_ho, mb_ho = opt.buffers_for("b_ho", state.b_ho.shape)
    return (vW_ih, vb_ih, vW_ho, vb_ho, mW_ih, mb_ih, mW_ho, mb_ho)


def _validate_schedule(dataset: Dataset, schedule: Schedule) -> None:
    if len(schedule.order) != len(dataset):
        raise ValueError(f"schedule length {len(schedule.order)} != dataset "
                         f"size {len(dataset)}")


def train_incremental(spec: models.ModelSpec, state: models.ModelState,
                      dataset: Dataset, schedule: Schedule,
                      test_dataset: Dataset, opt: optim.OptimizerState,
                      config: TrainConfig, run: int = 0,
                      condition: str | None = None,
                      test_order: np.ndarray | None = None) -> TrainCurve:
    """One update per sample along the schedule; state is mutated in place.

    Evaluates on test_dataset before training and every eval_every samples
    (and at each epoch end); config.eval_mode picks the evaluation protocol,
    with test_order giving the ordered mode's presentation order.
    """
    _validate_schedule(dataset, schedule)
    kr = get_kernels(config.backend)
    X = dataset.samples
    T = targets_for(spec, dataset)
    order = schedule.order
    n = len(order)
    reset = models.reset_matrix(spec, X[order], dataset.labels[order],
                                reset_period=config.reset_period)
    v_m = _opt_arrays(opt, state)
    curve = TrainCurve(run=run,
                       condition=condition if condition is not None
                       else schedule.condition)

    def eval_point(iteration, samples_seen, train_loss):
        _check_params_finite(state, iteration)
        res = evaluate(spec, state, test_dataset, config.eval_mode,
                       order=test_order, backend=config.backend)
        curve.points.append(CurvePoint(iteration, samples_seen,
                                       train_loss, res.loss, res.accuracy))

    eval_point(0, 0, math.nan)
    H_rec = np.empty((n, spec.hidden_dim)) if config.record_hidden \
        else np.empty((1, 1))
    iteration = 0
    for _ in range(config.epochs):
        state.reset_memory()
        pos = 0
        while pos < n:
            stop = min(n, pos + config.eval_every
                       - (iteration % config.eval_every))
            seg_loss = kr.dense_train_segment(
                X, T, order, pos, stop, reset,
                state.W_ih, state.b_ih, state.W_ho, state.b_ho,
                state.H_prev, spec.alphas_array,
                OUT_ACT_CODE[spec.output_activation], LOSS_CODE[spec.loss],
                1 if spec.use_bias else 0, opt.kind_code,
                opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon,
                *v_m, H_rec, 1 if config.record_hidden else 0)
            iteration += stop - pos
            pos = stop
            eval_point(iteration, iteration, float(seg_loss))
        state.trial_count += n
    if config.record_hidden:
        curve.hidden = H_rec
    return curve


def train_minibatch(spec: models.ModelSpec, state: models.ModelState,
                    dataset: Dataset, schedule: Schedule,
                    test_dataset: Dataset, opt: optim.OptimizerState,
                    config: TrainConfig, run: int = 0,
                    condition: str | None = None) -> TrainCurve:
    """Feedforward training with batched, order-invariant gradient averaging.

    Each batch takes config.batch_size consecutive schedule positions (the
    final batch may be shorter), averages their per-sample gradients through
    the canonical sorted reduction, and applies one optimizer update. The
    curve's iteration counts updates; samples_seen counts samples.
    """
    if not spec.is_feedforward:
        raise ValueError("mini-batch training requires a feedforward spec "
                         "(leak coefficients all zero)")
    _validate_schedule(dataset, schedule)
    kr = get_kernels(config.backend)
    X = dataset.samples
    T = targets_for(spec, dataset)
    order = schedule.order
    n = len(order)
    bs = config.batch_size
    bufs = {"W_ih": np.empty((spec.hidden_dim * spec.input_dim, bs)),
            "b_ih": np.empty((spec.hidden_dim, bs)),
            "W_ho": np.empty((spec.output_dim * spec.hidden_dim, bs)),
            "b_ho": np.empty((spec.output_dim, bs))}
    params = state.params(spec.use_bias)
    means = {name: np.empty(p.size) for name, p in params.items()}
    curve = TrainCurve(run=run,
                       condition=condition if condition is not None
                       else schedule.condition)

    def eval_point(iteration, samples_seen, train_loss):
        _check_params_finite(state, iteration)
        res = evaluate(spec, state, test_dataset, config.eval_mode,
                       backend=config.backend)
        curve.points.append(CurvePoint(iteration, samples_seen,
                                       train_loss, res.loss, res.accuracy))

    eval_point(0, 0, math.nan)
    updates = 0
    samples_seen = 0
    next_eval = config.eval_every
    for _ in range(config.epochs):
        pos = 0
        loss_acc = 0.0
        count_acc = 0
        while pos < n:
            count = min(bs, n - pos)
            loss_sum = kr.dense_batch_grads(
                X, T, order, pos, count,
                state.W_ih, state.b_ih, state.W_ho, state.b_ho,
                OUT_ACT_CODE[spec.output_activation], LOSS_CODE[spec.loss],
                1 if spec.use_bias else 0,
                bufs["W_ih"], bufs["b_ih"], bufs["W_ho"], bufs["b_ho"])
            grads = {}
            for name, p in params.items():
                kr.canonical_mean_cols(bufs[name], count, means[name])
                grads[name] = means[name].reshape(p.shape)
            optim.step(opt, params, grads)
            updates += 1
            samples_seen += count
            loss_acc += loss_sum
            count_acc += count
            pos += count
            if samples_seen >= next_eval or pos >= n:
                eval_point(updates, samples_seen, loss_acc / count_acc)
                loss_acc = 0.0
                count_acc = 0
                while next_eval <= samples_seen:
                    next_eval += config.eval_every
        state.trial_count += n
    return curve


def batch_label_sets(dataset: Dataset, schedule: Schedule,
                     batch_size: int) -> list[np.ndarray]:
    """Unique labels inside each batch window of the schedule, in order."""
    labels = dataset.labels[schedule.order]
    return [np.unique(labels[s:s + batch_size])
            for s in range(0, len(labels), batch_size)]


# --- curve serialization ------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def save_curves_csv(path, curves: list[TrainCurve]) -> None:
    """One row per curve point, columns fixed by CURVE_COLUMNS."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CURVE_COLUMNS)
        for c in curves:
            for p in c.points:
                w.writerow([c.run, c.condition, p.iteration, p.samples_seen,
                            _fmt(p.train_loss), _fmt(p.test_loss),
                            _fmt(p.test_acc)])


def load_curves_csv(path) -> list[TrainCurve]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != list(CURVE_COLUMNS):
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        curves: dict[tuple, TrainCurve] = {}
        for row in reader:
            key = (int(row["run"]), row["condition"])
            curve = curves.get(key)
            if curve is None:
                curve = TrainCurve(run=key[0], condition=key[1])
                curves[key] = curve
            curve.points.append(CurvePoint(
                int(row["iteration"]), int(row["samples_seen"]),
                float(row["train_loss"]), float(row["test_loss"]),
                float(row["test_acc"])))
    return list(curves.values())
