"""Single-hidden-layer networks whose hidden units carry a leaky memory.

The hidden state mixes the previous trial's state with the current
instantaneous response, per unit:

    H(n) = a*H(n-1) + (1-a)*relu(W_ih @ I(n) + b_ih)

where a is the unit's leak coefficient, replaced by 0 on trials where that
unit's memory is reset (gating). a=0 everywhere recovers a plain feedforward
network. Training is incremental and leak-unaware: the backward pass treats
H(n-1) as a constant, so no gradient flows through time.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .numerics import relu, relu_deriv, sigmoid, softmax, xavier_init

OUTPUT_ACTIVATIONS = ("softmax", "sigmoid")
LOSSES = ("mse", "ce")
GATINGS = ("none", "label_reset", "input_reset")

PARAM_ORDER = ("W_ih", "b_ih", "W_ho", "b_ho")


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    hidden_dim: int
    output_dim: int
    leak_alphas: tuple = 0.0          # scalar or one coefficient per hidden unit
    output_activation: str = "softmax"
    loss: str = "mse"
    gating: str = "none"
    use_bias: bool = True
    # per-unit input indices watched by input gating; None = every unit
    # watches the whole input vector
    input_monitor: tuple | None = None

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        alphas = self.leak_alphas
        if np.isscalar(alphas):
            alphas = (float(alphas),) * self.hidden_dim
        else:
            alphas = tuple(float(a) for a in alphas)
        if len(alphas) != self.hidden_dim:
            raise ValueError(f"leak_alphas has {len(alphas)} entries for "
                             f"{self.hidden_dim} hidden units")
        for a in alphas:
            if not (0.0 <= a < 1.0):
                raise ValueError(f"leak coefficient {a} outside [0, 1)")
        object.__setattr__(self, "leak_alphas", alphas)
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output_activation {self.output_activation!r}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "ce" and self.output_activation != "softmax":
            raise ValueError("ce loss requires softmax output")
        if self.gating not in GATINGS:
            raise ValueError(f"unknown gating {self.gating!r}")
        if self.input_monitor is not None:
            monitor = tuple(tuple(int(i) for i in idx) for idx in self.input_monitor)
            if len(monitor) != self.hidden_dim:
                raise ValueError("input_monitor needs one index set per hidden unit")
            for idx in monitor:
                if len(idx) == 0:
                    raise ValueError("input_monitor entries must be non-empty")
                for i in idx:
                    if not (0 <= i < self.input_dim):
                        raise ValueError(f"input_monitor index {i} out of range")
            object.__setattr__(self, "input_monitor", monitor)

    @property
    def alphas_array(self) -> np.ndarray:
        return np.asarray(self.leak_alphas, dtype=np.float64)

    @property
    def is_feedforward(self) -> bool:
        return all(a == 0.0 for a in self.leak_alphas)

    def monitor_indices(self) -> list[np.ndarray]:
        if self.input_monitor is None:
            full = np.arange(self.input_dim)
            return [full] * self.hidden_dim
        return [np.asarray(idx, dtype=np.int64) for idx in self.input_monitor]


def multiscale_autoencoder(input_dim: int = 6, hidden_dim: int = 3,
                           leak_alphas=(0.0, 0.3, 0.6),
                           gating: str = "none") -> ModelSpec:
    """Autoencoder whose hidden units span several timescales.

    Unit u watches the u-th equal-width block of the input, so input gating
    resets each unit from the subcomponent it is paired with.
    """
    if input_dim % hidden_dim != 0:
        raise ValueError("input_dim must split evenly across hidden units")
    width = input_dim // hidden_dim
    monitor = tuple(tuple(range(u * width, (u + 1) * width))
                    for u in range(hidden_dim))
    return ModelSpec(input_dim=input_dim, hidden_dim=hidden_dim,
                     output_dim=input_dim, leak_alphas=leak_alphas,
                     output_activation="sigmoid", loss="mse",
                     gating=gating, input_monitor=monitor)


@dataclass
class ModelState:
    W_ih: np.ndarray
    b_ih: np.ndarray
    W_ho: np.ndarray
    b_ho: np.ndarray
    H_prev: np.ndarray
    trial_count: int = 0

    def clone(self) -> "ModelState":
        return ModelState(self.W_ih.copy(), self.b_ih.copy(),
                          self.W_ho.copy(), self.b_ho.copy(),
                          self.H_prev.copy(), self.trial_count)

    def params(self, use_bias: bool = True) -> dict[str, np.ndarray]:
        out = {"W_ih": self.W_ih, "W_ho": self.W_ho}
        if use_bias:
            out["b_ih"] = self.b_ih
            out["b_ho"] = self.b_ho
        return {name: out[name] for name in PARAM_ORDER if name in out}

    def reset_memory(self) -> None:
        self.H_prev[:] = 0.0


def init_state(spec: ModelSpec, rng, hidden_bias: float = 0.0) -> ModelState:
    """Xavier weights, constant biases (zero unless hidden_bias is given).

    hidden_bias shifts the hidden pre-activations up; narrow relu layers fed
    strictly positive inputs need it to keep every unit responsive from the
    first trial.
    """
    return ModelState(
        W_ih=xavier_init(rng, spec.input_dim, spec.hidden_dim),
        b_ih=np.full(spec.hidden_dim, float(hidden_bias)),
        W_ho=xavier_init(rng, spec.hidden_dim, spec.output_dim),
        b_ho=np.zeros(spec.output_dim),
        H_prev=np.zeros(spec.hidden_dim),
    )


@dataclass
class ForwardTrace:
    input: np.ndarray
    hidden_pre: np.ndarray        # pre-activation of the hidden layer
    instantaneous: np.ndarray     # relu(hidden_pre)
    effective_alpha: np.ndarray   # leak used on this trial, after gating
    hidden: np.ndarray            # H(n)
    output_pre: np.ndarray
    output: np.ndarray
    trial_count: int = 0


def _reset_to_array(spec: ModelSpec, reset) -> np.ndarray:
    if np.isscalar(reset) or isinstance(reset, (bool, np.bool_)):
        return np.full(spec.hidden_dim, bool(reset))
    arr = np.asarray(reset, dtype=bool)
    if arr.shape != (spec.hidden_dim,):
        raise ValueError(f"reset flags shape {arr.shape} != ({spec.hidden_dim},)")
    return arr


def forward(spec: ModelSpec, state: ModelState, x: np.ndarray,
            reset=False) -> ForwardTrace:
    """One trial. Mutates state: H_prev, trial_count.

    reset may be a single flag or one flag per hidden unit; a True flag
    replaces that unit's leak coefficient with 0 for this trial.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.input_dim,):
        raise ValueError(f"input shape {x.shape} != ({spec.input_dim},)")
    reset_arr = _reset_to_array(spec, reset)
    eff = np.where(reset_arr, 0.0, spec.alphas_array)

    z_h = state.W_ih @ x
    if spec.use_bias:
        z_h = z_h + state.b_ih
    inst = relu(z_h)
    h = eff * state.H_prev + (1.0 - eff) * inst
    z_o = state.W_ho @ h
    if spec.use_bias:
        z_o = z_o + state.b_ho
    y = softmax(z_o) if spec.output_activation == "softmax" else sigmoid(z_o)

    state.H_prev = h.copy()
    state.trial_count += 1
    return ForwardTrace(input=x, hidden_pre=z_h, instantaneous=inst,
                        effective_alpha=eff, hidden=h, output_pre=z_o,
                        output=y, trial_count=state.trial_count)


def output_delta(spec: ModelSpec, y: np.ndarray, target: np.ndarray) -> np.ndarray:
    """dL/d(output_pre) for the spec's loss and output activation."""
    if spec.loss == "ce":
        return y - target
    g = (2.0 / y.shape[0]) * (y - target)
    if spec.output_activation == "softmax":
        return y * (g - np.dot(g, y))
    return g * y * (1.0 - y)


def backward_leak_unaware(spec: ModelSpec, state: ModelState,
                          trace: ForwardTrace,
                          target: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients for the trial recorded in trace, with H(n-1) held constant.

    The (1 - effective_alpha) factor on the instantaneous response is kept;
    everything reaching the hidden layer through the previous state is
    dropped. Must be called before the next forward on this state.
    """
    if trace.trial_count != state.trial_count:
        raise ValueError("stale trace: state has advanced since this forward")
    target = np.asarray(target, dtype=np.float64)
    if target.shape != trace.output.shape:
        raise ValueError(f"target shape {target.shape} != output shape "
                         f"{trace.output.shape}")
    delta_o = output_delta(spec, trace.output, target)
    d_hidden = state.W_ho.T @ delta_o
    delta_h = d_hidden * (1.0 - trace.effective_alpha) * relu_deriv(trace.hidden_pre)
    grads = {"W_ih": np.outer(delta_h, trace.input),
             "W_ho": np.outer(delta_o, trace.hidden)}
    if spec.use_bias:
        grads["b_ih"] = delta_h
        grads["b_ho"] = delta_o
    return {name: grads[name] for name in PARAM_ORDER if name in grads}


def trial_loss(spec: ModelSpec, y: np.ndarray, target: np.ndarray) -> float:
    if spec.loss == "ce":
        p = max(float(y[int(np.argmax(target))]), 1e-12)
        return -np.log(p)
    d = y - target
    return float(np.mean(d * d))


# --- memory gating ----------------------------------------------------------

def label_gate(prev_label, current_label) -> bool:
    """Reset when the category changes; the first trial always resets."""
    return prev_label is None or int(prev_label) != int(current_label)


def input_gate(spec: ModelSpec, prev_input: np.ndarray,
               current_input: np.ndarray) -> np.ndarray:
    """Per-unit reset flags from the inputs alone.

    A unit resets when, over the indices it watches, the mean absolute
    change exceeds the absolute mean of the two trials' average:

        mean(|I_n - I_{n-1}|) > |mean((I_n + I_{n-1}) / 2)|
    """
    prev_input = np.asarray(prev_input, dtype=np.float64)
    current_input = np.asarray(current_input, dtype=np.float64)
    flags = np.zeros(spec.hidden_dim, dtype=bool)
    for u, idx in enumerate(spec.monitor_indices()):
        a = current_input[idx]
        b = prev_input[idx]
        flags[u] = np.mean(np.abs(a - b)) > abs(np.mean((a + b) / 2.0))
    return flags


def reset_matrix(spec: ModelSpec, inputs_in_order: np.ndarray,
                 labels_in_order: np.ndarray | None = None,
                 reset_period: int | None = None) -> np.ndarray:
    """Per-position, per-unit reset indicator (1.0 = reset) for a whole pass.

    Position 0 always resets. Label gating resets every unit on category
    boundaries; input gating applies the input_gate criterion per unit;
    reset_period additionally resets every unit each time that many trials
    have elapsed.
    """
    X = np.asarray(inputs_in_order, dtype=np.float64)
    n = X.shape[0]
    R = np.zeros((n, spec.hidden_dim))
    if spec.gating == "label_reset":
        if labels_in_order is None:
            raise ValueError("label gating needs labels_in_order")
        labels = np.asarray(labels_in_order)
        R[1:][labels[1:] != labels[:-1]] = 1.0
    elif spec.gating == "input_reset":
        for u, idx in enumerate(spec.monitor_indices()):
            a = X[1:][:, idx]
            b = X[:-1][:, idx]
            lhs = np.mean(np.abs(a - b), axis=1)
            rhs = np.abs(np.mean((a + b) / 2.0, axis=1))
            R[1:, u] = (lhs > rhs).astype(np.float64)
    if reset_period is not None:
        if reset_period < 1:
            raise ValueError("reset_period must be >= 1")
        R[::reset_period] = 1.0
    R[0] = 1.0
    return R


# --- prediction -------------------------------------------------------------

def batched_forward(spec: ModelSpec, state: ModelState,
                    X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feedforward pass on rows of X with memory reset before every row.

    With every unit reset, H(n) = relu(z_h) regardless of the leaks, so the
    whole batch reduces to two matrix products.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = X @ state.W_ih.T
    if spec.use_bias:
        Z = Z + state.b_ih
    H = relu(Z)
    Zo = H @ state.W_ho.T
    if spec.use_bias:
        Zo = Zo + state.b_ho
    if spec.output_activation == "softmax":
        Y = softmax(Zo)
    else:
        Y = sigmoid(Zo)
    return Y, H


def predict(spec: ModelSpec, state: ModelState, X: np.ndarray,
            eval_mode: str = "stateless",
            reset: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Outputs (and hidden states) for rows of X without touching state.

    stateless: every row is an independent trial with memory reset.
    ordered: rows are consecutive trials; memory starts at zero and evolves
    under the per-position reset flags (reset_matrix output). When every
    flag is set the ordered pass is the stateless pass, and it is computed
    by the same batched route so the two agree exactly.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if eval_mode == "stateless":
        return batched_forward(spec, state, X)
    if eval_mode != "ordered":
        raise ValueError(f"unknown eval_mode {eval_mode!r}")
    if reset is None:
        reset = reset_matrix(spec, X)
    reset = np.asarray(reset, dtype=np.float64)
    if reset.shape != (X.shape[0], spec.hidden_dim):
        raise ValueError(f"reset matrix shape {reset.shape} != "
                         f"{(X.shape[0], spec.hidden_dim)}")
    if np.all(reset == 1.0):
        return batched_forward(spec, state, X)

    alphas = spec.alphas_array
    Y = np.empty((X.shape[0], spec.output_dim))
    H = np.empty((X.shape[0], spec.hidden_dim))
    h_prev = np.zeros(spec.hidden_dim)
    for n in range(X.shape[0]):
        z_h = state.W_ih @ X[n]
        if spec.use_bias:
            z_h = z_h + state.b_ih
        eff = alphas * (1.0 - reset[n])
        h = eff * h_prev + (1.0 - eff) * relu(z_h)
        z_o = state.W_ho @ h
        if spec.use_bias:
            z_o = z_o + state.b_ho
        Y[n] = softmax(z_o) if spec.output_activation == "softmax" else sigmoid(z_o)
        H[n] = h
        h_prev = h
    return Y, H


# --- checkpoints -------------------------------------------------------------

def write_tensor_csv(path, tensors: dict[str, np.ndarray],
                     scalars: dict[str, int]) -> None:
    """Shared checkpoint format: one CSV row per tensor, values
    space-separated with full precision; scalar counters appended."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tensor", "shape", "values"])
        for name, arr in tensors.items():
            shape = "x".join(str(s) for s in arr.shape)
            w.writerow([name, shape,
                        " ".join(repr(float(v)) for v in arr.ravel())])
        for name, value in scalars.items():
            w.writerow([name, "scalar", str(value)])


def read_tensor_csv(path) -> tuple[dict[str, np.ndarray], dict[str, int]]:
    path = Path(path)
    tensors: dict[str, np.ndarray] = {}
    scalars: dict[str, int] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != ["tensor", "shape", "values"]:
            raise ValueError(f"{path}: not a checkpoint file")
        for row in reader:
            if row["shape"] == "scalar":
                scalars[row["tensor"]] = int(row["values"])
                continue
            shape = tuple(int(s) for s in row["shape"].split("x"))
            vals = np.array([float(v) for v in row["values"].split()])
            if vals.size != int(np.prod(shape)):
                raise ValueError(f"{path}: tensor {row['tensor']} has "
                                 f"{vals.size} values for shape {shape}")
            tensors[row["tensor"]] = vals.reshape(shape)
    return tensors, scalars


def save_checkpoint(state: ModelState, path) -> None:
    write_tensor_csv(path,
                     {name: getattr(state, name)
                      for name in ("W_ih", "b_ih", "W_ho", "b_ho", "H_prev")},
                     {"trial_count": state.trial_count})


def load_checkpoint(path, spec: ModelSpec | None = None) -> ModelState:
    tensors, scalars = read_tensor_csv(path)
    missing = {"W_ih", "b_ih", "W_ho", "b_ho", "H_prev"} - set(tensors)
    if missing:
        raise ValueError(f"{path}: checkpoint missing tensors {sorted(missing)}")
    state = ModelState(tensors["W_ih"], tensors["b_ih"], tensors["W_ho"],
                       tensors["b_ho"], tensors["H_prev"],
                       scalars.get("trial_count", 0))
    if spec is not None:
        want = (spec.hidden_dim, spec.input_dim)
        if state.W_ih.shape != want:
            raise ValueError(f"{path}: W_ih shape {state.W_ih.shape} does not "
                             f"match spec {want}")
        if state.W_ho.shape != (spec.output_dim, spec.hidden_dim):
            raise ValueError(f"{path}: W_ho shape {state.W_ho.shape} does not "
                             f"match spec {(spec.output_dim, spec.hidden_dim)}")
    return state
