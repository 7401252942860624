"""Losses with gradients, curve smoothing, correlation and selectivity
analyses, and bootstrap statistics behind the results tables.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROLE_NAMES = ("no_memory", "short_memory", "long_memory")
TIMESCALE_NAMES = ("fast", "medium", "slow")


def mse_loss(output: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient 2(output-target)/dim."""
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise ValueError(f"shape mismatch {output.shape} vs {target.shape}")
    diff = output - target
    return float(np.mean(diff * diff)), (2.0 / output.size) * diff


def ce_loss(output: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Cross-entropy against a one-hot target: -log of the probability at
    the target index, clipped below at 1e-12. Gradient is with respect to
    the output probabilities."""
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise ValueError(f"shape mismatch {output.shape} vs {target.shape}")
    total = float(np.sum(output))
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"output sums to {total}, not a probability vector")
    idx = int(np.argmax(target))
    p = max(float(output[idx]), 1e-12)
    grad = np.zeros_like(output)
    grad[idx] = -1.0 / p
    return -float(np.log(p)), grad


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean over min(window, position+1) points; same length out."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty input")
    if window < 1:
        raise ValueError("window must be >= 1")
    c = np.concatenate(([0.0], np.cumsum(values)))
    out = np.empty(values.size)
    for i in range(values.size):
        lo = max(0, i - window + 1)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson_r needs two equal-length 1-d series")
    if x.size < 2:
        raise ValueError("pearson_r needs at least 2 points")
    xc = x - np.mean(x)
    yc = y - np.mean(y)
    sx = float(np.sqrt(np.sum(xc * xc)))
    sy = float(np.sqrt(np.sum(yc * yc)))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("undefined correlation: constant series")
    return float(np.dot(xc, yc) / (sx * sy))


@dataclass
class SelectivityReport:
    r_squared: np.ndarray     # (roles, timescales)
    selectivity: np.ndarray   # per role: matched r^2 - mean non-matched r^2

    def __post_init__(self):
        self.r_squared = np.asarray(self.r_squared, dtype=np.float64)
        self.selectivity = np.asarray(self.selectivity, dtype=np.float64)
        if np.any(self.r_squared < 0) or np.any(self.r_squared > 1):
            raise ValueError("r_squared entries must lie in [0, 1]")


def timescale_selectivity(hidden_series: np.ndarray,
                          feature_series: np.ndarray,
                          subcomponents) -> SelectivityReport:
    """Squared Pearson correlations between each hidden unit's activation
    series and each timescale's features.

    hidden_series: (N, units) recorded over an ordered test stream, unit u
    filling role u (no/short/long memory by position). feature_series:
    (N, features) the same stream's inputs. subcomponents: per-timescale
    index sets partitioning the features; r^2(role, timescale) averages over
    that timescale's columns. selectivity(role) = matched r^2 - mean of the
    non-matched r^2.

    A unit whose series is constant (a relu unit that never fires) carries
    no linear association with anything, so its r^2 entries are 0 rather
    than pearson_r's undefined-correlation error. Feature columns stay
    strict: a constant feature means a broken stream.
    """
    H = np.asarray(hidden_series, dtype=np.float64)
    X = np.asarray(feature_series, dtype=np.float64)
    if H.ndim != 2 or X.ndim != 2 or H.shape[0] != X.shape[0]:
        raise ValueError("hidden and feature series must share their length")
    n_units = H.shape[1]
    if len(subcomponents) != n_units:
        raise ValueError(f"{len(subcomponents)} timescales for {n_units} "
                         "unit roles; need one per role")
    r2 = np.empty((n_units, n_units))
    for u in range(n_units):
        unit_constant = np.all(H[:, u] == H[0, u])
        for s, idx in enumerate(subcomponents):
            cols = X[:, idx]
            if cols.shape[1] == 0:
                raise ValueError(f"subcomponent {s} selects no feature "
                                 "columns")
            for j in range(cols.shape[1]):
                if np.all(cols[:, j] == cols[0, j]):
                    raise ValueError("undefined correlation: constant series")
            if unit_constant:
                r2[u, s] = 0.0
                continue
            r2[u, s] = float(np.mean(
                [pearson_r(H[:, u], cols[:, j]) ** 2
                 for j in range(cols.shape[1])]))
    sel = np.empty(n_units)
    for u in range(n_units):
        others = [r2[u, s] for s in range(n_units) if s != u]
        sel[u] = r2[u, u] - float(np.mean(others))
    return SelectivityReport(r2, sel)


@dataclass
class BootstrapSummary:
    mean: float
    std: float
    num_bootstraps: int
    values_per_bootstrap: int


def bootstrap_mean_std(values, num_bootstraps: int, values_per_bootstrap: int,
                       rng) -> BootstrapSummary:
    """Mean and std of resample means: values_per_bootstrap draws with
    replacement, num_bootstraps times."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty values")
    if num_bootstraps < 1 or values_per_bootstrap < 1:
        raise ValueError("bootstrap counts must be >= 1")
    idx = rng.integers(0, values.size,
                       size=(num_bootstraps, values_per_bootstrap))
    means = np.mean(values[idx], axis=1)
    return BootstrapSummary(float(np.mean(means)), float(np.std(means)),
                            num_bootstraps, values_per_bootstrap)


def bands_exclude_zero(summary: BootstrapSummary) -> bool:
    return (summary.mean - summary.std > 0.0) or \
        (summary.mean + summary.std < 0.0)


def bands_overlap(a: BootstrapSummary, b: BootstrapSummary) -> bool:
    return not (a.mean + a.std < b.mean - b.std
                or b.mean + b.std < a.mean - a.std)


def per_feature_error(outputs: np.ndarray, targets: np.ndarray,
                      subcomponents) -> np.ndarray:
    """MSE restricted to each index set; the sets must partition the
    output dimensions."""
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise ValueError(f"shape mismatch {outputs.shape} vs {targets.shape}")
    dim = outputs.shape[-1]
    seen = np.zeros(dim, dtype=np.int64)
    for idx in subcomponents:
        seen[np.asarray(idx, dtype=np.int64)] += 1
    if not np.all(seen == 1):
        raise ValueError("subcomponent map does not partition the "
                         f"{dim} output dimensions")
    diff = outputs - targets
    return np.array([float(np.mean(diff[..., np.asarray(idx)] ** 2))
                     for idx in subcomponents])


def memory_interference_scan(unit_feature_r2, error_delta) -> float:
    """Across-run correlation between a unit's coupling to a feature set
    (r^2 of its activity with those features) and the model's extra error
    on that feature set relative to a no-memory twin."""
    unit_feature_r2 = np.asarray(unit_feature_r2, dtype=np.float64)
    error_delta = np.asarray(error_delta, dtype=np.float64)
    if unit_feature_r2.shape != error_delta.shape:
        raise ValueError("per-run series must have equal lengths")
    if unit_feature_r2.size < 20:
        raise ValueError(f"need >= 20 runs, got {unit_feature_r2.size}")
    return pearson_r(unit_feature_r2, error_delta)


# --- CSV serialization --------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows_csv(path, columns, rows) -> None:
    """Rows of dicts to CSV with a fixed column order; floats via repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def selectivity_rows(report: SelectivityReport, **meta) -> list[dict]:
    """One row per (role, timescale) pair, plus that role's selectivity."""
    rows = []
    n = report.r_squared.shape[0]
    for u in range(n):
        for s in range(n):
            rows.append(dict(meta,
                             role=ROLE_NAMES[u] if n == 3 else f"role{u}",
                             timescale=TIMESCALE_NAMES[s] if n == 3
                             else f"timescale{s}",
                             r_squared=float(report.r_squared[u, s]),
                             selectivity=float(report.selectivity[u])))
    return rows


def bootstrap_rows(summary: BootstrapSummary, **meta) -> list[dict]:
    return [dict(meta, mean=summary.mean, std=summary.std,
                 num_bootstraps=summary.num_bootstraps,
                 values_per_bootstrap=summary.values_per_bootstrap)]
