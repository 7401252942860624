"""Numeric substrate: seeded RNG, weight init, activations and their derivatives.

All values are float64. "Matrix" throughout the package means a C-contiguous
2-D float64 ndarray (row-major), vectors are 1-D float64 ndarrays.
"""
from __future__ import annotations

import numpy as np


class Rng:
    """Deterministic random source pinned to numpy's PCG64 bit generator.

    The algorithm is pinned explicitly (not ``default_rng``) so that the same
    seed yields the same stream on every platform. Each instance is
    single-owner: never share one across concurrent runs.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def spawn(self, key: int) -> "Rng":
        """Derive an independent child stream; (seed, key) fully determines it."""
        # SeedSequence gives well-separated child states for small keys.
        child = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(key),))
        rng = Rng.__new__(Rng)
        rng.seed = self.seed
        rng._gen = np.random.Generator(np.random.PCG64(child))
        return rng

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, values, size=None, replace: bool = True):
        return self._gen.choice(values, size=size, replace=replace)


def xavier_init(rng: Rng, fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform Xavier/Glorot init on [-sqrt(6/(fan_in+fan_out)), +bound].

    Returns a (fan_out, fan_in) matrix so that ``W @ x`` maps inputs to outputs.
    """
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan dimensions must be >= 1, got ({fan_in}, {fan_out})")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, (fan_out, fan_in))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_deriv(x: np.ndarray) -> np.ndarray:
    """Subgradient of ReLU; defined as 0 at exactly 0."""
    return (x > 0.0).astype(np.float64)


def softmax(x: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis (max-subtraction).

    Each row of a 2-d input is normalized independently; a 1-d input is one
    row. Row sums are 1 within 1e-12.
    """
    z = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic, computed without overflow for large |x|.

    Inputs are clipped to [-500, 500] before exponentiation; the clip is the
    identity wherever the result is distinguishable from 0 or 1 in float64.
    The hot-path kernels use this exact formulation.
    """
    z = np.minimum(np.maximum(x, -500.0), 500.0)
    return 1.0 / (1.0 + np.exp(-z))


def seeded_permutation(rng: Rng, n: int) -> np.ndarray:
    """Uniform random permutation of 0..n-1; deterministic given the rng seed."""
    if n < 1:
        raise ValueError(f"permutation length must be >= 1, got {n}")
    return rng.permutation(n)


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")
