"""Synthetic datasets, CSV ingestion, standardization, and masking helpers.

Two generator families stand in for real tabular/image data at desk scale:
a tabular generator whose label rule mixes single-feature, pairwise-product,
and many-feature components (so order-control training has headroom in both
directions), and a grid generator whose classes are global stripe patterns
(structure spans the grid; per-sample cell shuffling destroys the labels).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .serialize import atomic_write_text, canonical_json, fmt_cell, sha256_hex, write_json

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """Row-major mapping between grid cells and variable indices."""

    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ConfigError("grid dimensions must be positive")

    @property
    def n(self) -> int:
        return self.height * self.width

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise ValueError(f"cell ({row}, {col}) outside {self.height}x{self.width} grid")
        return row * self.width + col

    def coords(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n:
            raise ValueError(f"index {index} outside [0, {self.n})")
        return divmod(index, self.width)

    def ring_distance(self, index: int) -> int:
        """Steps from the boundary inward; boundary cells have distance 0."""
        r, c = self.coords(index)
        return min(r, c, self.height - 1 - r, self.width - 1 - c)

    def chebyshev(self, a: int, b: int) -> int:
        ra, ca = self.coords(a)
        rb, cb = self.coords(b)
        return max(abs(ra - rb), abs(ca - cb))

    def surround_order(self) -> np.ndarray:
        """All cell indices sorted boundary-first (ties by row-major index)."""
        idx = np.arange(self.n)
        rings = np.array([self.ring_distance(i) for i in idx])
        return idx[np.lexsort((idx, rings))]


@dataclass
class Dataset:
    """Standardized feature matrix with labels, fixed split, and baseline.

    Features are stored standardized by the training split's mean/std; the
    baseline vector is the per-feature mean of the standardized training rows
    and is what masking substitutes for absent variables.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    train_idx: np.ndarray
    test_idx: np.ndarray
    baseline: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    provenance: dict = field(default_factory=dict)
    grid: GridSpec | None = None
    reference_accuracy: float | None = None
    raw: np.ndarray | None = None  # pre-standardization features, kept for exact CSV export

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def train_features(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_idx]

    @property
    def test_features(self) -> np.ndarray:
        return self.features[self.test_idx]

    @property
    def test_labels(self) -> np.ndarray:
        return self.labels[self.test_idx]

    def raw_features(self) -> np.ndarray:
        if self.raw is not None:
            return self.raw
        return self.features * self.feature_std + self.feature_mean

    def digest(self) -> str:
        payload = self.features.tobytes() + self.labels.tobytes()
        return sha256_hex(payload + canonical_json(self.provenance).encode())[:16]

    def manifest(self) -> dict:
        return {
            "kind": "dataset",
            "n": self.n,
            "n_classes": self.n_classes,
            "samples": int(self.features.shape[0]),
            "grid": [self.grid.height, self.grid.width] if self.grid else None,
            "provenance": self.provenance,
            "baseline": self.baseline,
            "feature_mean": self.feature_mean,
            "feature_std": self.feature_std,
            "reference_accuracy": self.reference_accuracy,
            "digest": self.digest(),
        }

    def save_manifest(self, path: str | Path) -> None:
        write_json(path, self.manifest())

    def save_csv(self, path: str | Path) -> None:
        """Raw (unstandardized) features plus the label column."""
        raw = self.raw_features()
        header = [f"f{i}" for i in range(self.n)] + ["label"]
        lines = [",".join(header)]
        for row, label in zip(raw, self.labels):
            lines.append(",".join([fmt_cell(v) for v in row] + [str(int(label))]))
        atomic_write_text(path, "\n".join(lines) + "\n")


def _standardize_and_split(
    raw: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    split_seed: int,
    train_fraction: float,
    provenance: dict,
    grid: GridSpec | None = None,
    reference_accuracy: float | None = None,
) -> Dataset:
    k = raw.shape[0]
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train fraction must be in (0, 1), got {train_fraction}")
    perm = np.random.default_rng(split_seed).permutation(k)
    cut = int(round(train_fraction * k))
    if cut < 2 or k - cut < 1:
        raise ConfigError(f"split leaves too few samples (train={cut}, test={k - cut})")
    train_idx, test_idx = np.sort(perm[:cut]), np.sort(perm[cut:])
    mean = raw[train_idx].mean(axis=0)
    std = raw[train_idx].std(axis=0)
    low = std < STD_FLOOR
    if low.any():
        warnings.warn(
            f"{int(low.sum())} near-constant feature column(s); std floored at {STD_FLOOR}",
            stacklevel=3,
        )
        std = np.where(low, STD_FLOOR, std)
    features = (raw - mean) / std
    baseline = features[train_idx].mean(axis=0)
    return Dataset(
        features=features,
        labels=labels.astype(np.int64),
        n_classes=n_classes,
        train_idx=train_idx,
        test_idx=test_idx,
        baseline=baseline,
        feature_mean=mean,
        feature_std=std,
        provenance=provenance,
        grid=grid,
        reference_accuracy=reference_accuracy,
        raw=raw,
    )


@dataclass(frozen=True)
class TabularSignalSpec:
    """Mixing weights of the tabular label rule.

    The class scores combine a linear part, pairwise feature products, and a
    soft count-threshold over all features (the many-feature component);
    label_noise flips that fraction of labels to a random other class.
    """

    linear_weight: float = 1.0
    pairwise_weight: float = 1.0
    highorder_weight: float = 1.0
    label_noise: float = 0.02
    pairs: int | None = None  # default: n pairwise product terms
    sharpness: float = 2.0

    def validate(self) -> None:
        if min(self.linear_weight, self.pairwise_weight, self.highorder_weight) < 0:
            raise ConfigError("signal weights must be non-negative")
        if not 0 <= self.label_noise <= 1:
            raise ConfigError("label noise must be in [0, 1]")
        if self.linear_weight == self.pairwise_weight == self.highorder_weight == 0:
            raise ConfigError("at least one signal component must be active")


def gen_tabular(
    n: int = 12,
    n_classes: int = 2,
    samples: int = 4000,
    seed: int = 0,
    signal: TabularSignalSpec | None = None,
    train_fraction: float = 0.8,
) -> Dataset:
    """Reproducible tabular classification data with tunable signal orders."""
    if not 6 <= n <= 24:
        raise ConfigError(f"tabular generator supports n in [6, 24], got {n}")
    if n_classes < 2:
        raise ConfigError("need at least two classes")
    signal = signal or TabularSignalSpec()
    signal.validate()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, n))

    n_pairs = signal.pairs if signal.pairs is not None else n
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pair_rows = rng.choice(len(all_pairs), size=min(n_pairs, len(all_pairs)), replace=False)
    pairs = [all_pairs[r] for r in pair_rows]
    pi = np.array([p[0] for p in pairs])
    pj = np.array([p[1] for p in pairs])
    products = x[:, pi] * x[:, pj]
    soft_count = np.tanh(2.0 * x).sum(axis=1) / np.sqrt(n)

    scores = np.empty((samples, n_classes))
    for c in range(n_classes):
        lin = x @ (rng.standard_normal(n) / np.sqrt(n))
        pw = products @ (rng.standard_normal(len(pairs)) / np.sqrt(len(pairs)))
        threshold = rng.standard_normal()
        ho = np.tanh(signal.sharpness * (soft_count - threshold))
        scores[:, c] = (
            signal.linear_weight * lin
            + signal.pairwise_weight * pw
            + signal.highorder_weight * ho
        )
    clean = scores.argmax(axis=1)
    labels = clean.copy()
    flip = rng.random(samples) < signal.label_noise
    shift = rng.integers(1, n_classes, size=samples)
    labels[flip] = (labels[flip] + shift[flip]) % n_classes
    reference_accuracy = float((labels == clean).mean())

    provenance = {
        "generator": "tabular",
        "n": n,
        "n_classes": n_classes,
        "samples": samples,
        "seed": seed,
        "signal": {
            "linear_weight": signal.linear_weight,
            "pairwise_weight": signal.pairwise_weight,
            "highorder_weight": signal.highorder_weight,
            "label_noise": signal.label_noise,
            "pairs": len(pairs),
            "sharpness": signal.sharpness,
        },
    }
    return _standardize_and_split(
        x, labels, n_classes, seed, train_fraction, provenance,
        reference_accuracy=reference_accuracy,
    )


def grid_templates(grid: GridSpec, n_classes: int = 4, phases: int = 4) -> np.ndarray:
    """Binary stripe templates, shape (n_classes, phases, n).

    Classes are stripe orientations (horizontal, vertical, diagonal,
    anti-diagonal) of period 4 and width 2; the phase shifts the pattern.
    Every template activates exactly half of the cells, so all classes share
    the same cell-value multiset and only the arrangement carries the label.
    """
    if not 2 <= n_classes <= 4:
        raise ConfigError("grid generator supports 2 to 4 classes")
    rows, cols = np.meshgrid(np.arange(grid.height), np.arange(grid.width), indexing="ij")
    out = np.zeros((n_classes, phases, grid.n))
    coords = [rows, cols, rows + cols, rows - cols]
    for c in range(n_classes):
        for ph in range(phases):
            on = ((coords[c] + ph) % 4) < 2
            out[c, ph] = on.astype(np.float64).reshape(-1)
    return out


def gen_grid(
    grid: GridSpec | None = None,
    n_classes: int = 4,
    samples: int = 6000,
    seed: int = 0,
    amplitude: float = 2.0,
    texture_noise: float = 0.8,
    train_fraction: float = 0.8,
) -> Dataset:
    """Grid data whose classes are global stripe arrangements.

    Each sample is a class template at a random phase, scaled by ``amplitude``
    and perturbed by Gaussian texture noise.  Shuffling the cells of every
    sample independently removes all class information.
    """
    grid = grid or GridSpec(8, 8)
    rng = np.random.default_rng(seed)
    templates = grid_templates(grid, n_classes)
    phases = templates.shape[1]
    labels = rng.integers(0, n_classes, size=samples)
    phase = rng.integers(0, phases, size=samples)
    x = amplitude * templates[labels, phase] + texture_noise * rng.standard_normal(
        (samples, grid.n)
    )
    provenance = {
        "generator": "grid",
        "height": grid.height,
        "width": grid.width,
        "n_classes": n_classes,
        "samples": samples,
        "seed": seed,
        "amplitude": amplitude,
        "texture_noise": texture_noise,
    }
    return _standardize_and_split(
        x, labels, n_classes, seed, train_fraction, provenance, grid=grid
    )


def load_csv(
    path: str | Path,
    label_column: str = "label",
    seed: int = 0,
    train_fraction: float = 0.8,
) -> Dataset:
    """Load a headered CSV of numeric features plus one categorical label column."""
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ConfigError(f"{path}: no column named {label_column!r} in header {header}")
        label_pos = header.index(label_column)
        feature_names = [h for t, h in enumerate(header) if t != label_pos]
        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            feats = []
            for t, cell in enumerate(row):
                if t == label_pos:
                    raw_labels.append(cell.strip())
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise ConfigError(
                        f"{path}:{lineno}: column {header[t]!r}: non-numeric cell {cell!r}"
                    ) from None
            rows.append(feats)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    classes = sorted(set(raw_labels))
    label_of = {c: t for t, c in enumerate(classes)}
    labels = np.array([label_of[c] for c in raw_labels], dtype=np.int64)
    raw = np.array(rows, dtype=np.float64)
    provenance = {
        "generator": "csv",
        "path": str(path),
        "label_column": label_column,
        "classes": classes,
        "feature_names": feature_names,
        "seed": seed,
    }
    return _standardize_and_split(raw, labels, len(classes), seed, train_fraction, provenance)


def mask_random(
    x: np.ndarray, m: int, rng: np.random.Generator, baseline: np.ndarray
) -> np.ndarray:
    """Replace m uniformly chosen cells of x by the baseline."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if not 0 <= m <= n:
        raise ValueError(f"masked count {m} outside [0, {n}]")
    out = x.copy()
    cells = rng.choice(n, size=m, replace=False)
    out[..., cells] = baseline[cells]
    return out


def surround_mask_cells(grid: GridSpec, m: int) -> np.ndarray:
    """The m cells masked by boundary-inward masking (deteministic ring order)."""
    if not 0 <= m <= grid.n:
        raise ValueError(f"masked count {m} outside [0, {grid.n}]")
    return grid.surround_order()[:m]


def mask_surround(x: np.ndarray, m: int, grid: GridSpec, baseline: np.ndarray) -> np.ndarray:
    """Mask the m cells closest to the grid boundary, keeping the center."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != grid.n:
        raise ValueError(f"sample has {x.shape[-1]} cells, grid has {grid.n}")
    out = x.copy()
    cells = surround_mask_cells(grid, m)
    out[..., cells] = baseline[cells]
    return out


def mask_random_batch(
    x: np.ndarray, m: int, rng: np.random.Generator, baseline: np.ndarray
) -> np.ndarray:
    """Independently mask m uniformly chosen cells in every row of x."""
    x = np.asarray(x, dtype=np.float64)
    k, n = x.shape
    if not 0 <= m <= n:
        raise ValueError(f"masked count {m} outside [0, {n}]")
    if m == 0:
        return x.copy()
    keys = rng.random((k, n))
    masked_cells = np.argpartition(keys, m - 1, axis=1)[:, :m]
    out = x.copy()
    rows = np.repeat(np.arange(k), m)
    out[rows, masked_cells.ravel()] = np.broadcast_to(baseline, (k, n))[
        rows, masked_cells.ravel()
    ]
    return out
