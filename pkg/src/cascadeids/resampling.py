"""Class-balance strategies: SMOTE, ENN cleaning, SMOTEENN and hybrid sampling.

All neighbour searches use Euclidean distance on the features as given, so
callers should scale before resampling.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from cascadeids.core import CLASSES, Dataset, class_counts, rng_for

log = logging.getLogger(__name__)

STRATEGIES = ("none", "smote", "hybrid", "smoteenn")


@dataclass(frozen=True)
class ResampleConfig:
    strategy: str = "none"
    smote_k: int = 5
    enn_k: int = 3
    hybrid_target: int = 12000
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown resampling strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if self.enn_k < 1 or self.enn_k % 2 == 0:
            raise ValueError("enn_k must be a positive odd number")
        if self.hybrid_target < 1:
            raise ValueError("hybrid_target must be >= 1")


def nearest_neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows of ``X`` for every row (self excluded)."""
    n = X.shape[0]
    if k >= n:
        raise ValueError(f"need more than k={k} rows, got {n}")
    _, idx = cKDTree(X).query(X, k=k + 1)
    idx = np.asarray(idx).reshape(n, k + 1)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        row = idx[i]
        hit = np.flatnonzero(row == i)
        # with duplicate points the row itself need not come first
        out[i] = np.delete(row, hit[0]) if hit.size else row[:k]
    return out


def interpolate(X: np.ndarray, base: np.ndarray, neighbor: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    """Synthetic points ``x + u * (x_nn - x)`` for paired base/neighbour indices."""
    gaps = np.asarray(gaps, dtype=np.float64)[:, None]
    return X[base] + gaps * (X[neighbor] - X[base])


def smote(ds: Dataset, target: dict[int, int], k: int = 5, seed: int = 0) -> Dataset:
    """Oversample each class up to ``target[cls]`` rows with synthetic interpolations.

    Original rows are kept untouched and come first; synthetic rows carry
    ``row_id == -1``.
    """
    counts = class_counts(ds)
    parts = [ds]
    for cls in CLASSES:
        want = int(target.get(cls, counts[cls]))
        have = counts[cls]
        if want < have:
            raise ValueError(f"target {want} for class {cls} is below its current count {have}")
        if want == have:
            continue
        if have < 2:
            raise ValueError(f"class {cls} has {have} row(s); SMOTE needs at least 2 to find a neighbour")
        k_eff = k
        if k > have - 1:
            k_eff = have - 1
            warnings.warn(f"smote k={k} exceeds class {cls} size - 1; using k={k_eff}", stacklevel=2)
        members = np.flatnonzero(ds.labels == cls)
        Xc = ds.features[members]
        nn = nearest_neighbors(Xc, k_eff)
        rng = rng_for(seed, 0x5307E, cls)
        n_new = want - have
        base = rng.integers(0, have, size=n_new)
        pick = rng.integers(0, k_eff, size=n_new)
        gaps = rng.random(n_new)
        synth = interpolate(Xc, base, nn[base, pick], gaps)
        parts.append(
            Dataset(synth, np.full(n_new, cls), ds.feature_names, np.full(n_new, -1, dtype=np.int64))
        )
    return Dataset.concat(parts) if len(parts) > 1 else ds


def balance_target(ds: Dataset) -> dict[int, int]:
    top = max(class_counts(ds).values())
    return {cls: top for cls in CLASSES}


def enn_flags(X: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of rows whose label disagrees with their k-NN majority vote."""
    nn = nearest_neighbors(X, k)
    votes = y[nn].sum(axis=1)
    majority = (2 * votes > k).astype(np.int64)
    return majority != y


def enn_filter(ds: Dataset, k: int = 3) -> Dataset:
    """Edited nearest neighbours: drop every row outvoted by its k neighbours.

    Votes are computed once on the input, so removals do not cascade.
    """
    if len(np.unique(ds.labels)) < 2:
        return ds
    if ds.n_rows <= k:
        raise ValueError(f"enn_filter needs more than k={k} rows, got {ds.n_rows}")
    drop = enn_flags(ds.features, ds.labels, k)
    if not drop.any():
        return ds
    return ds.take(np.flatnonzero(~drop))


def smote_enn(ds: Dataset, cfg: ResampleConfig) -> Dataset:
    balanced = smote(ds, balance_target(ds), k=cfg.smote_k, seed=cfg.seed)
    return enn_filter(balanced, k=cfg.enn_k)


def hybrid_sample(ds: Dataset, cfg: ResampleConfig) -> Dataset:
    """SMOTE the minority up to ``hybrid_target``, undersample the majority down to it."""
    counts = class_counts(ds)
    minority = min(CLASSES, key=lambda c: (counts[c], c))
    majority = 1 - minority
    target = cfg.hybrid_target
    out = ds
    if counts[minority] < target:
        out = smote(out, {minority: target}, k=cfg.smote_k, seed=cfg.seed)
    if counts[majority] > target:
        maj_rows = np.flatnonzero(out.labels == majority)
        keep_maj = rng_for(cfg.seed, 0x4B1D).choice(maj_rows, size=target, replace=False)
        keep = np.sort(np.concatenate([np.flatnonzero(out.labels != majority), keep_maj]))
        out = out.take(keep)
    return out


def resample(ds: Dataset, cfg: ResampleConfig) -> Dataset:
    if cfg.strategy == "none":
        return ds
    if cfg.strategy == "smote":
        return smote(ds, balance_target(ds), k=cfg.smote_k, seed=cfg.seed)
    if cfg.strategy == "smoteenn":
        return smote_enn(ds, cfg)
    return hybrid_sample(ds, cfg)
