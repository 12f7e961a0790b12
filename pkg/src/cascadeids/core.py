"""Dataset container, label constants, seeding and stratified splitting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BENIGN = 0
MALICIOUS = 1
CLASSES = (BENIGN, MALICIOUS)
N_CLASSES = 2


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with binary labels.

    ``row_ids`` tracks provenance: the index of each row in the dataset it was
    originally ingested from, or -1 for synthetic rows created by resampling.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        names = tuple(str(n) for n in self.feature_names)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if X.shape[1] != len(names):
            raise ValueError(f"{X.shape[1]} columns but {len(names)} feature names")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if y.size and not np.isin(y, CLASSES).all():
            raise ValueError("labels must be 0 (benign) or 1 (malicious)")
        if self.row_ids is None:
            ids = np.arange(X.shape[0], dtype=np.int64)
        else:
            ids = np.asarray(self.row_ids, dtype=np.int64).reshape(-1)
            if ids.shape[0] != X.shape[0]:
                raise ValueError("row_ids length must equal number of rows")
        X = X.copy()
        y = y.copy()
        ids = ids.copy()
        for arr in (X, y, ids):
            arr.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    def take(self, index) -> Dataset:
        """Return the rows selected by an integer index array."""
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.features[index], self.labels[index], self.feature_names, self.row_ids[index])

    def with_features(self, features: np.ndarray, feature_names=None) -> Dataset:
        names = self.feature_names if feature_names is None else feature_names
        return Dataset(features, self.labels, names, self.row_ids)

    def select_columns(self, names) -> Dataset:
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(self.features[:, cols], self.labels, tuple(names), self.row_ids)

    @staticmethod
    def concat(parts: list[Dataset]) -> Dataset:
        if not parts:
            raise ValueError("nothing to concatenate")
        names = parts[0].feature_names
        for p in parts[1:]:
            if p.feature_names != names:
                raise ValueError("feature names differ between datasets")
        return Dataset(
            np.vstack([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            names,
            np.concatenate([p.row_ids for p in parts]),
        )


def derive_seed(root: int, *path: int) -> int:
    """Stable 64-bit seed for the unit identified by ``path`` under ``root``.

    Depends only on its arguments, so parallel units get the same seeds no
    matter how they are scheduled.
    """
    seq = np.random.SeedSequence(entropy=int(root) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_for(root: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *path))


def class_counts(ds: Dataset) -> dict[int, int]:
    counts = np.bincount(ds.labels, minlength=N_CLASSES)
    return {BENIGN: int(counts[BENIGN]), MALICIOUS: int(counts[MALICIOUS])}


def stratified_split_indices(labels, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; test gets round(count * fraction) rows, at least 1."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = np.asarray(labels, dtype=np.int64)
    train_parts, test_parts = [], []
    for cls in CLASSES:
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            name = "malicious" if cls == MALICIOUS else "benign"
            raise ValueError(f"class {cls} ({name}) has {members.size} rows; stratified split needs at least 2")
        n_test = max(1, int(np.floor(members.size * test_fraction + 0.5)))
        n_test = min(n_test, members.size - 1)
        perm = rng_for(seed, cls).permutation(members)
        test_parts.append(perm[:n_test])
        train_parts.append(perm[n_test:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def stratified_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = stratified_split_indices(ds.labels, test_fraction, seed)
    return ds.take(train_idx), ds.take(test_idx)


def stratified_folds(labels, n_folds: int, seed: int) -> np.ndarray:
    """Assign each row a fold id in ``range(n_folds)``, balanced within each class."""
    labels = np.asarray(labels, dtype=np.int64)
    folds = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for cls in CLASSES:
        members = np.flatnonzero(labels == cls)
        perm = rng_for(seed, cls).permutation(members)
        folds[perm] = (np.arange(perm.size) + offset) % n_folds
        offset += perm.size
    return folds
