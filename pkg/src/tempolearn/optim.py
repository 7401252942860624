"""Parameter update rules: incremental SGD, RMSprop with momentum, and
order-invariant mini-batch gradient accumulation.

The RMSprop variant keeps a momentum buffer on the normalized gradient:

    v <- beta2*v + (1-beta2)*g*g
    m <- beta1*m + (1-beta1)*g / (sqrt(v) + eps)
    p <- p - lr*m

beta1=0 gives plain RMSprop. No bias correction is applied.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SGD = 0
RMSPROP = 1

_KINDS = {"sgd": SGD, "rmsprop": RMSPROP}


@dataclass
class OptimizerState:
    kind: str = "sgd"
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8
    # per-parameter accumulators, keyed by parameter name
    second_moment: dict = field(default_factory=dict)
    momentum: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")

    @property
    def kind_code(self) -> int:
        return _KINDS[self.kind]

    def buffers_for(self, name: str, shape) -> tuple[np.ndarray, np.ndarray]:
        """Zero-initialized (second_moment, momentum) buffers for a parameter."""
        if name not in self.second_moment:
            self.second_moment[name] = np.zeros(shape)
            self.momentum[name] = np.zeros(shape)
        return self.second_moment[name], self.momentum[name]

    def clone_fresh(self) -> "OptimizerState":
        return OptimizerState(self.kind, self.learning_rate, self.beta1,
                              self.beta2, self.epsilon)


def _check_grad(name: str, param: np.ndarray, grad: np.ndarray) -> None:
    if param.shape != grad.shape:
        raise ValueError(f"gradient shape {grad.shape} != parameter shape "
                         f"{param.shape} for {name}")
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError(f"non-finite gradient for parameter {name}")


def sgd_step(opt: OptimizerState, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> None:
    """In-place p <- p - lr*g for every named parameter."""
    for name, p in params.items():
        g = grads[name]
        _check_grad(name, p, g)
        p -= opt.learning_rate * g


def rmsprop_step(opt: OptimizerState, params: dict[str, np.ndarray],
                 grads: dict[str, np.ndarray]) -> None:
    """In-place RMSprop-with-momentum update (see module docstring)."""
    for name, p in params.items():
        g = grads[name]
        _check_grad(name, p, g)
        v, m = opt.buffers_for(name, p.shape)
        v[...] = opt.beta2 * v + (1.0 - opt.beta2) * g * g
        m[...] = opt.beta1 * m + (1.0 - opt.beta1) * g / (np.sqrt(v) + opt.epsilon)
        p -= opt.learning_rate * m


def step(opt: OptimizerState, params: dict[str, np.ndarray],
         grads: dict[str, np.ndarray]) -> None:
    if opt.kind_code == SGD:
        sgd_step(opt, params, grads)
    else:
        rmsprop_step(opt, params, grads)


def canonical_mean(stack: np.ndarray) -> np.ndarray:
    """Mean over axis 0 that is bitwise invariant to the row order.

    Each element's addends are sorted ascending, then summed left to right,
    then divided by the count. Mini-batch gradient averaging goes through this
    so that sample order within a batch cannot change the update.
    """
    if stack.shape[0] == 0:
        raise ValueError("cannot reduce an empty stack")
    s = np.sort(stack, axis=0)
    acc = s[0].astype(np.float64).copy()
    for b in range(1, s.shape[0]):
        acc += s[b]
    return acc / s.shape[0]


class GradientAccumulator:
    """Collects per-sample gradients and flushes their order-invariant mean."""

    def __init__(self):
        self._stacks: dict[str, list[np.ndarray]] = {}
        self.count = 0

    def add(self, grads: dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for parameter {name}")
            self._stacks.setdefault(name, []).append(np.array(g, dtype=np.float64))
        self.count += 1

    def flush(self) -> dict[str, np.ndarray]:
        """Return the elementwise mean of accumulated gradients and reset."""
        if self.count == 0:
            raise ValueError("flush on empty accumulator")
        out = {name: canonical_mean(np.stack(stack))
               for name, stack in self._stacks.items()}
        self._stacks = {}
        self.count = 0
        return out


def accumulate_and_flush(acc: GradientAccumulator, *grads: dict[str, np.ndarray]):
    for g in grads:
        acc.add(g)
    return acc.flush()
