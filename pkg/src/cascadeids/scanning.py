"""Sliding-window re-representation of tabular rows (multi-grained scanning).

Every length-``window`` slice of a row becomes a training example for one
random and one completely-random forest; a row is then re-described by the
class vectors those forests emit for each of its slices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cascadeids.core import N_CLASSES, Dataset, derive_seed, stratified_folds
from cascadeids.forests import Forest, TreeParams, forest_fit

SCAN_FOREST_MODES = ("random", "completely_random")


def n_windows(d: int, window: int, stride: int = 1) -> int:
    return (d - window) // stride + 1


def window_slices(X: np.ndarray, window: int, stride: int = 1) -> np.ndarray:
    """Array of shape (n, windows, window) holding every slice of every row."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if window > d:
        raise ValueError(f"window {window} is wider than the {d} input features")
    view = np.lib.stride_tricks.sliding_window_view(X, window, axis=1)
    return np.ascontiguousarray(view[:, ::stride, :])


def pooled_slices(ds: Dataset, window: int, stride: int = 1) -> Dataset:
    """Training set for the window forests: each slice labelled with its row's label."""
    sl = window_slices(ds.features, window, stride)
    n, w, _ = sl.shape
    names = tuple(f"w{k}" for k in range(window))
    return Dataset(sl.reshape(n * w, window), np.repeat(ds.labels, w), names, np.repeat(ds.row_ids, w))


@dataclass
class Scanner:
    window: int
    stride: int
    input_dim: int
    forests: list[Forest]

    @property
    def n_windows(self) -> int:
        return n_windows(self.input_dim, self.window, self.stride)

    @property
    def output_dim(self) -> int:
        return self.n_windows * len(self.forests) * N_CLASSES

    def output_names(self) -> tuple[str, ...]:
        return tuple(
            f"scan_w{p}_f{f}_c{c}"
            for p in range(self.n_windows)
            for f in range(len(self.forests))
            for c in range(N_CLASSES)
        )

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.input_dim:
            raise ValueError(f"scanner expects rows of length {self.input_dim}, got {X.shape[1]}")
        return _transform_with(self.forests, X, self.window, self.stride)

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "stride": self.stride,
            "input_dim": self.input_dim,
            "forests": [f.to_dict() for f in self.forests],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Scanner:
        return cls(data["window"], data["stride"], data["input_dim"], [Forest.from_dict(f) for f in data["forests"]])


def _transform_with(forests, X, window, stride) -> np.ndarray:
    sl = window_slices(X, window, stride)
    n, w, _ = sl.shape
    flat = sl.reshape(n * w, window)
    # (n, windows, forests, classes): window major, forest minor, class innermost
    probs = np.stack([f.predict_proba(flat).reshape(n, w, N_CLASSES) for f in forests], axis=2)
    return probs.reshape(n, w * len(forests) * N_CLASSES)


def _fit_forests(ds: Dataset, window, stride, n_trees, params, seed) -> list[Forest]:
    pooled = pooled_slices(ds, window, stride)
    return [
        forest_fit(pooled, mode, n_trees=n_trees, params=params, seed=derive_seed(seed, k))
        for k, mode in enumerate(SCAN_FOREST_MODES)
    ]


def scan_fit(
    ds: Dataset,
    window: int = 2,
    n_trees: int = 30,
    params: TreeParams | None = None,
    seed: int = 0,
    stride: int = 1,
) -> Scanner:
    if ds.n_rows < 1:
        raise ValueError("scan_fit needs at least one row")
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    if window > ds.n_features:
        raise ValueError(f"window {window} is wider than the {ds.n_features} input features")
    forests = _fit_forests(ds, window, stride, n_trees, params, derive_seed(seed, 0))
    return Scanner(window, stride, ds.n_features, forests)


def scan_fit_transform(
    ds: Dataset,
    window: int = 2,
    n_trees: int = 30,
    params: TreeParams | None = None,
    seed: int = 0,
    stride: int = 1,
    cv_folds: int = 3,
) -> tuple[Scanner, np.ndarray]:
    """Fit a scanner and return out-of-fold transforms of the training rows.

    A training row's scanned features come from window forests that never saw
    that row, mirroring the cross-fitting the cascade uses.
    """
    scanner = scan_fit(ds, window, n_trees, params, seed, stride)
    folds = stratified_folds(ds.labels, cv_folds, derive_seed(seed, 1))
    out = np.empty((ds.n_rows, scanner.output_dim))
    for k in range(cv_folds):
        held = folds == k
        if not held.any():
            continue
        fold_forests = _fit_forests(
            ds.take(np.flatnonzero(~held)), window, stride, n_trees, params, derive_seed(seed, 2, k)
        )
        out[held] = _transform_with(fold_forests, ds.features[held], window, stride)
    return scanner, out


def scan_transform(scanner: Scanner, row) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise ValueError("scan_transform takes a single row")
    return scanner.transform(row)[0]
