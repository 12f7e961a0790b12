"""Cascade forest: layers of forests whose class vectors feed the next layer.

Layer 1 sees the base features (raw, or scanned when a scanner is used).
Every later layer sees the base features concatenated with the previous
layer's class vectors. Training-row class vectors are cross-fitted so that
no row is described by a forest that trained on it.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from cascadeids.core import N_CLASSES, Dataset, derive_seed, stratified_folds
from cascadeids.forests import Forest, TreeParams, forest_fit
from cascadeids.scanning import Scanner

log = logging.getLogger(__name__)

LAYER_FOREST_MODES = ("random", "completely_random")


@dataclass(frozen=True)
class CascadeConfig:
    max_layers: int = 8
    n_cascade_rf: int = 8
    n_trees: int = 100
    cv_folds: int = 3
    early_stop_patience: int = 1
    seed: int = 0
    max_depth: int | None = None
    min_samples_split: int = 2

    def __post_init__(self):
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        if self.n_cascade_rf < 1:
            raise ValueError("n_cascade_rf must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    @property
    def n_forests(self) -> int:
        return 2 * self.n_cascade_rf

    def forest_modes(self) -> list[str]:
        return [LAYER_FOREST_MODES[0]] * self.n_cascade_rf + [LAYER_FOREST_MODES[1]] * self.n_cascade_rf

    def tree_params(self) -> TreeParams:
        return TreeParams(max_depth=self.max_depth, min_samples_split=self.min_samples_split)

    def to_dict(self) -> dict:
        return asdict(self)


# Desk-scale profile used by the acceptance run: 30 trees, 2 forests per type, max 3 layers.
DESK_PROFILE = dict(n_trees=30, n_cascade_rf=2, max_layers=3)


@dataclass
class FoldTrace:
    """Bookkeeping for one cross-fitted forest: which rows trained it and which it described."""

    layer: int
    forest: int
    fold: int
    train_rows: np.ndarray
    predicted_rows: np.ndarray


@dataclass
class CascadeLayer:
    forests: list[Forest]
    input_dim: int

    def class_vectors(self, X) -> np.ndarray:
        """(n, n_forests * c) concatenation of each forest's class vector."""
        return np.hstack([f.predict_proba(X) for f in self.forests])

    def mean_proba(self, X) -> np.ndarray:
        return _mean_of_blocks(self.class_vectors(X), len(self.forests))


def _mean_of_blocks(vectors: np.ndarray, n_forests: int) -> np.ndarray:
    return vectors.reshape(vectors.shape[0], n_forests, N_CLASSES).mean(axis=1)


def argmax_class(proba: np.ndarray) -> np.ndarray:
    """Class with the larger probability; an exact tie goes to class 0."""
    return (proba[:, 1] > proba[:, 0]).astype(np.int64)


def layer_features(layer: CascadeLayer | None, row, base) -> np.ndarray:
    """Base features followed by the layer's per-forest class vectors."""
    base = np.asarray(base, dtype=np.float64)
    single = base.ndim == 1
    base2 = base.reshape(1, -1) if single else base
    if layer is None:
        return base
    row = np.asarray(row, dtype=np.float64)
    row2 = row.reshape(1, -1) if row.ndim == 1 else row
    if row2.shape[1] != layer.input_dim:
        raise ValueError(f"layer expects input of length {layer.input_dim}, got {row2.shape[1]}")
    out = np.hstack([base2, layer.class_vectors(row2)])
    return out[0] if single else out


@dataclass
class CascadeModel:
    layers: list[CascadeLayer]
    base_dim: int
    best_layer: int
    config: CascadeConfig
    scanner: Scanner | None = None
    valid_accuracy: list[float] = field(default_factory=list)
    fold_traces: list[FoldTrace] = field(default_factory=list, repr=False)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.scanner.input_dim if self.scanner is not None else self.base_dim

    def base_features(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if self.scanner is not None:
            return self.scanner.transform(X)
        if X.shape[1] != self.base_dim:
            raise ValueError(f"model expects {self.base_dim} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        base = self.base_features(X)
        if self.best_layer == 0:
            raise RuntimeError("cascade has no fitted layers")
        inp = base
        for k in range(self.best_layer):
            layer = self.layers[k]
            if k == self.best_layer - 1:
                return layer.mean_proba(inp)
            inp = np.hstack([base, layer.class_vectors(inp)])
        raise AssertionError("unreachable")

    def predict(self, X) -> np.ndarray:
        return argmax_class(self.predict_proba(X))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "base_dim": self.base_dim,
            "best_layer": self.best_layer,
            "valid_accuracy": list(self.valid_accuracy),
            "scanner": None if self.scanner is None else self.scanner.to_dict(),
            "layers": [
                {"input_dim": layer.input_dim, "forests": [f.to_dict() for f in layer.forests]}
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> CascadeModel:
        layers = [
            CascadeLayer([Forest.from_dict(f) for f in layer["forests"]], layer["input_dim"])
            for layer in data["layers"]
        ]
        scanner = None if data.get("scanner") is None else Scanner.from_dict(data["scanner"])
        return cls(
            layers=layers,
            base_dim=data["base_dim"],
            best_layer=data["best_layer"],
            config=CascadeConfig(**data["config"]),
            scanner=scanner,
            valid_accuracy=list(data["valid_accuracy"]),
        )


def should_stop(accuracies: list[float], patience: int, max_layers: int) -> bool:
    """Stopping rule over the validation accuracies recorded so far."""
    if len(accuracies) >= max_layers:
        return True
    best = max(accuracies)
    since = len(accuracies) - 1 - accuracies.index(best)
    return since >= patience


def best_layer_of(accuracies: list[float]) -> int:
    """1-based index of the highest accuracy, earliest on ties."""
    return int(np.argmax(accuracies)) + 1


def _crossfit_forest(X, y, folds, cv_folds, mode, cfg: CascadeConfig, seed, layer, fidx, traces):
    n = X.shape[0]
    oof = np.empty((n, N_CLASSES))
    for k in range(cv_folds):
        held = np.flatnonzero(folds == k)
        if held.size == 0:
            continue
        train_rows = np.flatnonzero(folds != k)
        ds = Dataset(X[train_rows], y[train_rows], tuple(f"x{j}" for j in range(X.shape[1])))
        forest = forest_fit(ds, mode, n_trees=cfg.n_trees, params=cfg.tree_params(), seed=derive_seed(seed, k))
        oof[held] = forest.predict_proba(X[held])
        traces.append(FoldTrace(layer, fidx, k, train_rows, held))
    return oof


def forest_seed(cfg: CascadeConfig, layer: int, forest: int) -> int:
    """Root seed of forest ``forest`` in 1-based layer ``layer``."""
    return derive_seed(cfg.seed, layer, forest)


def refit_seed(cfg: CascadeConfig, layer: int, forest: int) -> int:
    """Seed for the all-rows refit used at inference time."""
    return derive_seed(forest_seed(cfg, layer, forest), cfg.cv_folds)


def cascade_fit(
    train: Dataset,
    valid: Dataset,
    cfg: CascadeConfig = CascadeConfig(),
    scanner: Scanner | None = None,
    train_base: np.ndarray | None = None,
) -> CascadeModel:
    """Grow cascade layers until validation accuracy stops improving.

    ``train_base`` lets a caller pass pre-computed (e.g. out-of-fold scanned)
    base features for the training rows; otherwise they are derived from
    ``train`` through ``scanner`` if given.
    """
    if train.n_features != valid.n_features:
        raise ValueError("train and valid must have the same number of features")
    if len(np.unique(valid.labels)) < 2:
        raise ValueError("validation set contains a single class; accuracy-based stopping is degenerate")
    if train.n_rows < cfg.cv_folds:
        raise ValueError(f"need at least cv_folds={cfg.cv_folds} training rows")

    if train_base is not None:
        base_tr = np.asarray(train_base, dtype=np.float64)
    else:
        base_tr = scanner.transform(train.features) if scanner is not None else train.features
    base_va = scanner.transform(valid.features) if scanner is not None else valid.features
    base_dim = base_tr.shape[1]
    y = train.labels
    modes = cfg.forest_modes()

    layers: list[CascadeLayer] = []
    accs: list[float] = []
    traces: list[FoldTrace] = []
    inp_tr, inp_va = base_tr, base_va
    for L in range(1, cfg.max_layers + 1):
        folds = stratified_folds(y, cfg.cv_folds, derive_seed(cfg.seed, L, 0xF01D))
        names = tuple(f"x{j}" for j in range(inp_tr.shape[1]))
        full = Dataset(inp_tr, y, names)
        oof_blocks, va_blocks, forests = [], [], []
        for f, mode in enumerate(modes):
            fseed = forest_seed(cfg, L, f)
            oof_blocks.append(_crossfit_forest(inp_tr, y, folds, cfg.cv_folds, mode, cfg, fseed, L, f, traces))
            forest = forest_fit(full, mode, n_trees=cfg.n_trees, params=cfg.tree_params(), seed=refit_seed(cfg, L, f))
            forests.append(forest)
            va_blocks.append(forest.predict_proba(inp_va))
        layer = CascadeLayer(forests, inp_tr.shape[1])
        layers.append(layer)
        va_vec = np.hstack(va_blocks)
        acc = float(np.mean(argmax_class(_mean_of_blocks(va_vec, len(modes))) == valid.labels))
        accs.append(acc)
        log.info("cascade layer %d: validation accuracy %.5f", L, acc)
        if should_stop(accs, cfg.early_stop_patience, cfg.max_layers):
            break
        inp_tr = np.hstack([base_tr, np.hstack(oof_blocks)])
        inp_va = np.hstack([base_va, va_vec])

    return CascadeModel(
        layers=layers,
        base_dim=base_dim,
        best_layer=best_layer_of(accs),
        config=cfg,
        scanner=scanner,
        valid_accuracy=accs,
        fold_traces=traces,
    )


def cascade_predict_proba(model: CascadeModel, row) -> np.ndarray:
    return model.predict_proba(np.asarray(row, dtype=np.float64).reshape(1, -1))[0]
