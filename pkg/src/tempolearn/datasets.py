"""Dataset loading and synthesis.

Covers the IDX binary image/label format plus three synthetic families:
low-overlap category templates, non-overlapping-feature streams, and
multi-timescale streams whose subcomponents switch latent state at different
periods. All generated values lie in [0, 1].
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .numerics import Rng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Raised for malformed IDX files (bad magic, truncation, count mismatch)."""


@dataclass
class Dataset:
    """Ordered samples with integer category labels.

    samples: (N, feature_dim) float64 in [0, 1]
    labels:  (N,) int64 in [0, num_categories)
    """

    samples: np.ndarray
    labels: np.ndarray
    name: str
    feature_dim: int
    num_categories: int

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2 or self.samples.shape[1] != self.feature_dim:
            raise ValueError("samples must be (N, feature_dim)")
        if len(self.labels) != len(self.samples):
            raise ValueError("labels length must equal sample count")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_categories):
            raise ValueError("label outside 0..num_categories-1")

    def __len__(self) -> int:
        return len(self.samples)

    def subset(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(self.samples[indices], self.labels[indices],
                       name or self.name, self.feature_dim, self.num_categories)


@dataclass
class MultiScaleStream:
    """Stream of 6-element samples: 3 subcomponents x 2 elements each.

    latent_states[k] holds subcomponent k's underlying binary trace; the trace
    toggles between its two levels exactly every periods[k] samples.
    """

    samples: np.ndarray           # (length, 6)
    latent_states: np.ndarray     # (3, length)
    periods: tuple[int, int, int]
    low: float = 0.2
    high: float = 0.8

    # element columns per subcomponent: fast 0:2, medium 2:4, slow 4:6
    SUBCOMPONENT_SLICES = (slice(0, 2), slice(2, 4), slice(4, 6))

    def __len__(self) -> int:
        return len(self.samples)

    def switch_positions(self, k: int) -> np.ndarray:
        """Sample indices where subcomponent k's latent value changes."""
        trace = self.latent_states[k]
        return np.nonzero(trace[1:] != trace[:-1])[0] + 1

    def as_dataset(self, name: str = "multiscale") -> Dataset:
        # Labels are unused for reconstruction; keep a single dummy category.
        return Dataset(self.samples, np.zeros(len(self.samples), dtype=np.int64),
                       name, 6, 1)


@dataclass
class CategoryTemplate:
    category: int
    template: np.ndarray
    noise_halfwidth: float

    def __post_init__(self):
        if self.noise_halfwidth < 0:
            raise ValueError("noise_halfwidth must be >= 0")


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label file pair into a Dataset.

    Pixels are scaled to [0, 1] by division by 255. Raises IdxFormatError for
    wrong magic numbers, truncated files, or image/label count mismatches.
    """
    with open(images_path, "rb") as f:
        header = f.read(16)
        if len(header) < 16:
            raise IdxFormatError(f"{images_path}: truncated IDX image header")
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IDX_IMAGES_MAGIC:
            raise IdxFormatError(
                f"{images_path}: wrong magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
        raw = f.read(count * rows * cols)
        if len(raw) < count * rows * cols:
            raise IdxFormatError(f"{images_path}: truncated IDX image data")
    pixels = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    samples = pixels.reshape(count, rows * cols)

    with open(labels_path, "rb") as f:
        header = f.read(8)
        if len(header) < 8:
            raise IdxFormatError(f"{labels_path}: truncated IDX label header")
        magic, label_count = struct.unpack(">II", header)
        if magic != IDX_LABELS_MAGIC:
            raise IdxFormatError(
                f"{labels_path}: wrong magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
        raw = f.read(label_count)
        if len(raw) < label_count:
            raise IdxFormatError(f"{labels_path}: truncated IDX label data")
    labels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)

    if count != label_count:
        raise IdxFormatError(
            f"image count {count} != label count {label_count} "
            f"({images_path} vs {labels_path})")
    num_categories = int(labels.max()) + 1 if len(labels) else 0
    return Dataset(samples, labels, "idx", rows * cols, max(num_categories, 1))


def write_idx(dataset: Dataset, images_path, labels_path, rows: int, cols: int) -> None:
    """Write a Dataset back to IDX files (pixels quantized to uint8)."""
    if rows * cols != dataset.feature_dim:
        raise ValueError("rows*cols must equal feature_dim")
    n = len(dataset)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        f.write(np.rint(dataset.samples * 255.0).astype(np.uint8).tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, n))
        f.write(dataset.labels.astype(np.uint8).tobytes())


def make_low_overlap_templates(num_categories: int, dim: int,
                               high: float = 0.8, low: float = 0.2,
                               antiphase: bool = False) -> list[CategoryTemplate]:
    """Templates with disjoint high-value blocks of dim//num_categories elements.

    With antiphase=True (only for 2 categories), template B mirrors template A
    about 0.5 so their deviations from the midpoint are exact negatives.
    """
    block = dim // num_categories
    templates = []
    if antiphase:
        if num_categories != 2:
            raise ValueError("antiphase templates require exactly 2 categories")
        base = np.full(dim, low)
        base[:block] = high
        templates.append(CategoryTemplate(0, base, 0.0))
        templates.append(CategoryTemplate(1, 1.0 - base, 0.0))
        return templates
    for c in range(num_categories):
        t = np.full(dim, low)
        t[c * block:(c + 1) * block] = high
        templates.append(CategoryTemplate(c, t, 0.0))
    return templates


def gen_low_overlap(rng: Rng, num_categories: int, items_per_category: int,
                    dim: int, noise_halfwidth: float,
                    high: float = 0.8, low: float = 0.2) -> Dataset:
    """Low-overlap category dataset: disjoint high blocks + uniform noise.

    The default call (4, 300, 16, 0.1) gives 4 categories of 300 items, each a
    1x16 vector. Exemplar = template + U(-noise, +noise), clipped to [0, 1].
    """
    if num_categories < 2:
        raise ValueError("need at least 2 categories")
    if dim < num_categories:
        raise ValueError(f"dim {dim} < num_categories {num_categories}")
    templates = make_low_overlap_templates(num_categories, dim, high=high, low=low)
    samples = np.empty((num_categories * items_per_category, dim))
    labels = np.empty(num_categories * items_per_category, dtype=np.int64)
    for c, tpl in enumerate(templates):
        rows = slice(c * items_per_category, (c + 1) * items_per_category)
        noise = rng.uniform(-noise_halfwidth, noise_halfwidth, (items_per_category, dim))
        samples[rows] = np.clip(tpl.template + noise, 0.0, 1.0)
        labels[rows] = c
    return Dataset(samples, labels, "low_overlap", dim, num_categories)


def gen_non_overlapping_stream(rng: Rng, num_categories: int, items_per_category: int,
                               dim: int, noise_halfwidth: float = 0.1,
                               high: float = 0.8) -> Dataset:
    """Categories with disjoint active-feature supports over zero background.

    Category c is active exactly on indices [c*block, (c+1)*block) with
    block = dim // num_categories, so any two distinct categories (hence any
    two consecutive schedule positions with differing categories) share no
    active features.
    """
    if dim < 2 * num_categories:
        raise ValueError(f"dim {dim} < 2 * num_categories {num_categories}")
    block = dim // num_categories
    samples = np.zeros((num_categories * items_per_category, dim))
    labels = np.empty(num_categories * items_per_category, dtype=np.int64)
    for c in range(num_categories):
        rows = slice(c * items_per_category, (c + 1) * items_per_category)
        active = rng.uniform(-noise_halfwidth, noise_halfwidth,
                             (items_per_category, block)) + high
        samples[rows, c * block:(c + 1) * block] = np.clip(active, 0.0, 1.0)
        labels[rows] = c
    return Dataset(samples, labels, "non_overlapping", dim, num_categories)


def category_support(dataset: Dataset, category: int) -> np.ndarray:
    """Indices where any exemplar of the category is nonzero."""
    mask = dataset.labels == category
    return np.nonzero(np.any(dataset.samples[mask] != 0.0, axis=0))[0]


def gen_multiscale(rng: Rng, length: int, periods=(1, 3, 5),
                   noise_halfwidth: float = 0.1,
                   low: float = 0.2, high: float = 0.8) -> MultiScaleStream:
    """Multi-timescale stream: 3 subcomponents switching every periods[k] samples.

    Subcomponent k's latent trace starts at a seeded random level and toggles
    between `low` and `high` exactly every periods[k] samples; each of its two
    elements is latent + U(-noise, +noise). Values must stay inside [0, 1].
    """
    periods = tuple(int(p) for p in periods)
    if len(periods) != 3 or any(p < 1 for p in periods):
        raise ValueError("periods must be three counts >= 1")
    if not low < high:
        raise ValueError("low must be < high")
    if low - noise_halfwidth < 0.0 or high + noise_halfwidth > 1.0:
        raise ValueError(
            f"values would escape [0,1]: low-noise={low - noise_halfwidth}, "
            f"high+noise={high + noise_halfwidth}")
    levels = np.array([low, high])
    latent = np.empty((3, length))
    for k, period in enumerate(periods):
        start = int(rng.integers(0, 2))
        n_segments = -(-length // period)  # ceil
        states = (start + np.arange(n_segments)) % 2
        latent[k] = levels[np.repeat(states, period)[:length]]
    noise = rng.uniform(-noise_halfwidth, noise_halfwidth, (length, 6))
    samples = np.repeat(latent.T, 2, axis=1) + noise
    return MultiScaleStream(samples, latent, periods, low=low, high=high)


def train_test_split(rng: Rng, dataset: Dataset, test_fraction: float = 0.2) -> tuple[Dataset, Dataset]:
    """Fixed seeded split; synthetic data has no published split of its own."""
    n = len(dataset)
    perm = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return (dataset.subset(train_idx, dataset.name + "_train"),
            dataset.subset(test_idx, dataset.name + "_test"))


def save_dataset_csv(dataset: Dataset, path) -> None:
    """Header row: f0..f{d-1},label; values via repr for round-trip fidelity."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"f{i}" for i in range(dataset.feature_dim)] + ["label"])
        for x, y in zip(dataset.samples, dataset.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


def load_dataset_csv(path, name: str = "csv") -> Dataset:
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: last CSV column must be 'label'")
        dim = len(header) - 1
        samples, labels = [], []
        for row in r:
            samples.append([float(v) for v in row[:dim]])
            labels.append(int(row[dim]))
    samples = np.asarray(samples, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    num_categories = int(labels.max()) + 1 if len(labels) else 1
    return Dataset(samples, labels, name, dim, num_categories)
