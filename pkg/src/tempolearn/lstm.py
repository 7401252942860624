"""Single-layer LSTM classifier trained with truncated backpropagation
through time — the memory baseline the leaky models are compared against.

Gate weights are stacked row-wise as [input; forget; candidate; output].
Loss is MSE on a softmax output layer, applied at every step; gradients are
summed over a window and applied as one update. Hidden and cell state carry
across windows within an epoch (detached) and reset at epoch starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import optim
from .backend import get_kernels
from .datasets import Dataset
from .models import read_tensor_csv, write_tensor_csv
from .numerics import check_finite, sigmoid, softmax, xavier_init
from .sampling import Schedule
from .training import (CurvePoint, EvalResult, TrainConfig, TrainCurve,
                       targets_for)

GATE_ORDER = ("input", "forget", "candidate", "output")


@dataclass(frozen=True)
class LstmSpec:
    input_dim: int
    hidden_dim: int
    output_dim: int
    window_length: int = 10

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.window_length < 1:
            raise ValueError("window_length must be >= 1")


@dataclass
class LstmState:
    Wx: np.ndarray       # (4H, D) input parts, gate blocks stacked
    Wh: np.ndarray       # (4H, H) recurrent parts
    b: np.ndarray        # (4H,)
    W_hy: np.ndarray     # (out, H) output layer
    b_y: np.ndarray
    h: np.ndarray
    c: np.ndarray
    trial_count: int = 0

    def clone(self) -> "LstmState":
        return LstmState(self.Wx.copy(), self.Wh.copy(), self.b.copy(),
                         self.W_hy.copy(), self.b_y.copy(),
                         self.h.copy(), self.c.copy(), self.trial_count)

    def params(self) -> dict[str, np.ndarray]:
        return {"Wx": self.Wx, "Wh": self.Wh, "b": self.b,
                "W_hy": self.W_hy, "b_y": self.b_y}

    def reset_memory(self) -> None:
        self.h[:] = 0.0
        self.c[:] = 0.0


def init_lstm(spec: LstmSpec, rng) -> LstmState:
    """Per-gate xavier init; forget-gate bias starts at 1 (open) so early
    training does not flush the cell, a standard LSTM default."""
    H, D = spec.hidden_dim, spec.input_dim
    Wx = np.empty((4 * H, D))
    Wh = np.empty((4 * H, H))
    for g in range(4):
        Wx[g * H:(g + 1) * H] = xavier_init(rng, D, H)
        Wh[g * H:(g + 1) * H] = xavier_init(rng, H, H)
    b = np.zeros(4 * H)
    b[H:2 * H] = 1.0
    return LstmState(Wx=Wx, Wh=Wh, b=b,
                     W_hy=xavier_init(rng, H, spec.output_dim),
                     b_y=np.zeros(spec.output_dim),
                     h=np.zeros(H), c=np.zeros(H))


def lstm_step(spec: LstmSpec, state: LstmState,
              x: np.ndarray) -> np.ndarray:
    """One cell update plus the softmax readout; mutates h, c, trial_count."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.input_dim,):
        raise ValueError(f"input shape {x.shape} != ({spec.input_dim},)")
    H = spec.hidden_dim
    z = state.Wx @ x + state.Wh @ state.h + state.b
    ig = sigmoid(z[0:H])
    fg = sigmoid(z[H:2 * H])
    gg = np.tanh(z[2 * H:3 * H])
    og = sigmoid(z[3 * H:4 * H])
    state.c = fg * state.c + ig * gg
    state.h = og * np.tanh(state.c)
    state.trial_count += 1
    return softmax(state.W_hy @ state.h + state.b_y)


def window_loss(spec: LstmSpec, state: LstmState, X: np.ndarray,
                T: np.ndarray) -> float:
    """Sum over a window of per-step MSE losses, starting from the state's
    current h/c without mutating them. This is the quantity whose gradients
    the BPTT kernel computes (finite-difference target)."""
    probe = state.clone()
    total = 0.0
    for s in range(X.shape[0]):
        y = lstm_step(spec, probe, X[s])
        d = y - T[s]
        total += float(np.mean(d * d))
    return total


def lstm_bptt_train(spec: LstmSpec, state: LstmState, X: np.ndarray,
                    T: np.ndarray, opt: optim.OptimizerState,
                    backend: str | None = None) -> float:
    """One BPTT window: full backward through the given samples, gradients
    summed over steps, one optimizer update. Returns the mean step loss.
    h/c carry out of the window (detached)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    T = np.ascontiguousarray(T, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty window")
    if X.shape[0] != spec.window_length:
        raise ValueError(f"window has {X.shape[0]} samples, spec.window_length "
                         f"is {spec.window_length}")
    if X.shape[1] != spec.input_dim or T.shape != (X.shape[0], spec.output_dim):
        raise ValueError("window dims do not match spec")
    kr = get_kernels(backend)
    order = np.arange(X.shape[0], dtype=np.int64)
    v_m = _opt_arrays(opt, state)
    loss = kr.lstm_train_segment(
        X, T, order, 0, X.shape[0], spec.window_length,
        state.Wx, state.Wh, state.b, state.W_hy, state.b_y,
        state.h, state.c, opt.kind_code,
        opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon, *v_m)
    state.trial_count += X.shape[0]
    return float(loss)


def _opt_arrays(opt: optim.OptimizerState, state: LstmState):
    if opt.kind_code == optim.SGD:
        d2, d1 = np.zeros((1, 1)), np.zeros(1)
        return (d2, d2, d1, d2, d1, d2, d2, d1, d2, d1)
    vWx, mWx = opt.buffers_for("Wx", state.Wx.shape)
    vWh, mWh = opt.buffers_for("Wh", state.Wh.shape)
    vb, mb = opt.buffers_for("b", state.b.shape)
    vW_hy, mW_hy = opt.buffers_for("W_hy", state.W_hy.shape)
    vb_y, mb_y = opt.buffers_for("b_y", state.b_y.shape)
    return (vWx, vWh, vb, vW_hy, vb_y, mWx, mWh, mb, mW_hy, mb_y)


def evaluate_lstm(spec: LstmSpec, state: LstmState, dataset: Dataset,
                  eval_mode: str = "stateless",
                  order: np.ndarray | None = None,
                  backend: str | None = None) -> EvalResult:
    """stateless: h/c reset before every sample; ordered: h/c evolve along
    the order from zero. Training state is never mutated."""
    if len(dataset) == 0:
        raise ValueError("empty evaluation set")
    if eval_mode not in ("stateless", "ordered"):
        raise ValueError(f"unknown eval_mode {eval_mode!r}")
    fake_spec = _classifier_view(spec)
    T = targets_for(fake_spec, dataset)
    if order is None:
        order = np.arange(len(dataset), dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
    kr = get_kernels(backend)
    sq_err = np.zeros(spec.output_dim)
    loss, n_correct = kr.lstm_eval(
        dataset.samples, T, order,
        state.Wx, state.Wh, state.b, state.W_hy, state.b_y,
        1 if eval_mode == "stateless" else 0, sq_err)
    return EvalResult(float(loss), n_correct / len(order),
                      sq_err / len(order), len(order))


def _classifier_view(spec: LstmSpec):
    # targets_for only reads these fields
    from .models import ModelSpec
    return ModelSpec(input_dim=spec.input_dim, hidden_dim=spec.hidden_dim,
                     output_dim=spec.output_dim, output_activation="softmax",
                     loss="mse")


def train_lstm(spec: LstmSpec, state: LstmState, dataset: Dataset,
               schedule: Schedule, test_dataset: Dataset,
               opt: optim.OptimizerState, config: TrainConfig, run: int = 0,
               condition: str | None = None,
               test_order: np.ndarray | None = None) -> TrainCurve:
    """Window-by-window BPTT along the schedule; state mutated in place.

    Windows partition each epoch from position 0 regardless of evaluation
    cadence, so evaluation points snap to the next window boundary at or
    past each eval_every multiple. h/c reset at epoch starts and carry
    (detached) across windows inside an epoch.
    """
    if len(schedule.order) != len(dataset):
        raise ValueError(f"schedule length {len(schedule.order)} != dataset "
                         f"size {len(dataset)}")
    kr = get_kernels(config.backend)
    X = dataset.samples
    T = targets_for(_classifier_view(spec), dataset)
    order = schedule.order
    n = len(order)
    w = spec.window_length
    v_m = _opt_arrays(opt, state)
    curve = TrainCurve(run=run,
                       condition=condition if condition is not None
                       else schedule.condition)

    def eval_point(iteration, train_loss):
        for name, arr in state.params().items():
            try:
                check_finite(name, arr)
            except FloatingPointError as e:
                raise FloatingPointError(f"{e} at iteration {iteration}") from None
        res = evaluate_lstm(spec, state, test_dataset, config.eval_mode,
                            order=test_order, backend=config.backend)
        curve.points.append(CurvePoint(iteration, iteration,
                                       train_loss, res.loss, res.accuracy))

    eval_point(0, math.nan)
    iteration = 0
    for _ in range(config.epochs):
        state.reset_memory()
        pos = 0
        while pos < n:
            want = config.eval_every - (iteration % config.eval_every)
            stop = min(n, pos + w * max(1, math.ceil(want / w)))
            seg_loss = kr.lstm_train_segment(
                X, T, order, pos, stop, w,
                state.Wx, state.Wh, state.b, state.W_hy, state.b_y,
                state.h, state.c, opt.kind_code,
                opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon, *v_m)
            iteration += stop - pos
            pos = stop
            eval_point(iteration, float(seg_loss))
        state.trial_count += n
    return curve


def save_checkpoint(state: LstmState, path) -> None:
    write_tensor_csv(path,
                     {name: getattr(state, name)
                      for name in ("Wx", "Wh", "b", "W_hy", "b_y", "h", "c")},
                     {"trial_count": state.trial_count})


def load_checkpoint(path, spec: LstmSpec | None = None) -> LstmState:
    tensors, scalars = read_tensor_csv(path)
    missing = {"Wx", "Wh", "b", "W_hy", "b_y", "h", "c"} - set(tensors)
    if missing:
        raise ValueError(f"{path}: checkpoint missing tensors {sorted(missing)}")
    state = LstmState(tensors["Wx"], tensors["Wh"], tensors["b"],
                      tensors["W_hy"], tensors["b_y"], tensors["h"],
                      tensors["c"], scalars.get("trial_count", 0))
    if spec is not None:
        want = (4 * spec.hidden_dim, spec.input_dim)
        if state.Wx.shape != want:
            raise ValueError(f"{path}: Wx shape {state.Wx.shape} does not "
                             f"match spec {want}")
    return state
