"""Selects how the hot loops in kernels.py execute.

Two backends share that single source: "numba" compiles each kernel with
njit(cache=True, fastmath=False) — strict IEEE semantics, no contraction —
and "numpy" runs the plain functions. TEMPOLEARN_BACKEND picks the default
("numba" when importable, else "numpy"). canonical_mean_cols is the one
kernel with a hand-vectorized numpy twin, because its row loop is only fast
when compiled; the twin performs the same adds in the same order and a test
pins the two bitwise.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

from . import kernels as _src

ENV_VAR = "TEMPOLEARN_BACKEND"
BACKENDS = ("numba", "numpy")

_JITTED = ("dense_train_segment", "dense_ordered_eval", "dense_batch_grads",
           "lstm_train_segment", "lstm_eval")

_cache: dict[str, SimpleNamespace] = {}


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def available_backends() -> tuple[str, ...]:
    return BACKENDS if numba_available() else ("numpy",)


def default_backend() -> str:
    env = os.environ.get(ENV_VAR, "").strip().lower()
    if env:
        if env not in BACKENDS:
            raise ValueError(f"{ENV_VAR}={env!r}: expected one of {BACKENDS}")
        if env == "numba" and not numba_available():
            raise ValueError(f"{ENV_VAR}=numba but numba is not importable")
        return env
    return "numba" if numba_available() else "numpy"


def get_kernels(name: str | None = None) -> SimpleNamespace:
    """Kernel namespace for a backend; compiled lazily and cached."""
    if name is None:
        name = default_backend()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}: expected one of {BACKENDS}")
    if name in _cache:
        return _cache[name]
    if name == "numba":
        if not numba_available():
            raise ValueError("numba backend requested but numba is not importable")
        from numba import njit
        jit = njit(cache=True, fastmath=False)
        ns = SimpleNamespace(name="numba",
                             canonical_mean_cols=jit(_src.canonical_mean_cols),
                             **{k: jit(getattr(_src, k)) for k in _JITTED})
    else:
        ns = SimpleNamespace(name="numpy",
                             canonical_mean_cols=_src.canonical_mean_cols_numpy,
                             **{k: getattr(_src, k) for k in _JITTED})
    _cache[name] = ns
    return ns
