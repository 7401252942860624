"""Presentation-order schedules controlling temporal smoothness.

A schedule is a permutation of sample indices plus block-boundary flags. The
k-repetition schedule emits k consecutive exemplars per category visit; k=1 is
minimum smoothness (no two consecutive samples share a category). Within-
category exemplar order is generated once per session and shared across all
smoothness conditions so that only the interleaving differs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .numerics import Rng, seeded_permutation

SMOOTHNESS_PRESETS = (1, 3, 5, 10, 16, 24)


@dataclass
class Schedule:
    order: np.ndarray           # (N,) int64 sample indices, a permutation
    boundary_flags: np.ndarray  # (N,) bool; True where category changes (and at 0)
    condition: str              # "k_repetition(k)" or "random"
    category_order: np.ndarray | None
    seed: int | None

    def __post_init__(self):
        self.order = np.ascontiguousarray(self.order, dtype=np.int64)
        self.boundary_flags = np.ascontiguousarray(self.boundary_flags, dtype=np.bool_)
        if len(self.order) != len(self.boundary_flags):
            raise ValueError("order and boundary_flags must align")
        if len(self.order) and not self.boundary_flags[0]:
            raise ValueError("boundary_flags[0] must be True")

    def __len__(self) -> int:
        return len(self.order)


def compute_boundary_flags(labels_in_order: np.ndarray) -> np.ndarray:
    flags = np.empty(len(labels_in_order), dtype=np.bool_)
    if len(flags) == 0:
        return flags
    flags[0] = True
    flags[1:] = labels_in_order[1:] != labels_in_order[:-1]
    return flags


def shared_within_category_orders(dataset: Dataset, rng: Rng) -> dict[int, np.ndarray]:
    """One seeded permutation of each category's exemplar indices.

    Reused verbatim by every smoothness condition in a session, so the
    subsequence of exemplars within any category is condition-invariant.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    orders = {}
    for c in range(dataset.num_categories):
        idx = np.nonzero(dataset.labels == c)[0]
        if len(idx) == 0:
            orders[c] = idx
            continue
        orders[c] = idx[seeded_permutation(rng, len(idx))] if len(idx) > 1 else idx
    return orders


def k_repetition_schedule(dataset: Dataset, category_order: np.ndarray,
                          within_category_orders: dict[int, np.ndarray],
                          k: int) -> Schedule:
    """Cycle categories in category_order, emitting k unseen exemplars per visit.

    A category that runs out mid-block emits the shorter block and drops out of
    the cycle. Every training sample is used exactly once per epoch.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    category_order = [int(c) for c in category_order]
    cursors = {c: 0 for c in category_order}
    remaining = {c: len(within_category_orders[c]) for c in category_order}
    active = [c for c in category_order if remaining[c] > 0]
    out = np.empty(len(dataset), dtype=np.int64)
    pos = 0
    while active:
        next_active = []
        for c in active:
            take = min(k, remaining[c])
            start = cursors[c]
            out[pos:pos + take] = within_category_orders[c][start:start + take]
            pos += take
            cursors[c] += take
            remaining[c] -= take
            if remaining[c] > 0:
                next_active.append(c)
        active = next_active
    if pos != len(dataset):
        raise ValueError("within_category_orders do not cover the dataset")
    flags = compute_boundary_flags(dataset.labels[out])
    return Schedule(out, flags, f"k_repetition({k})",
                    np.asarray(category_order, dtype=np.int64), None)


def random_schedule(dataset: Dataset, rng: Rng) -> Schedule:
    """Uniform permutation of all sample indices (sampling without replacement)."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    order = seeded_permutation(rng, len(dataset))
    flags = compute_boundary_flags(dataset.labels[order])
    return Schedule(order, flags, "random", None, rng.seed)


def save_schedule_csv(schedule: Schedule, dataset: Dataset, path) -> None:
    """Audit dump: position, sample index, category, boundary flag."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["position", "sample_index", "category", "boundary"])
        for p, idx in enumerate(schedule.order):
            w.writerow([p, int(idx), int(dataset.labels[idx]),
                        int(schedule.boundary_flags[p])])
