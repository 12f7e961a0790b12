"""Comparison models: the pruned decision tree and L2 logistic regression."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cascadeids.core import Dataset
from cascadeids.forests import BASELINE_TREE, DecisionTree, TreeParams, fit_tree


def fit_decision_tree(ds: Dataset, params: TreeParams = BASELINE_TREE, seed: int = 0) -> DecisionTree:
    """Single exhaustive-split tree; published baseline settings by default."""
    return fit_tree(ds, params, seed)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(w, b, X, y, l2_lambda) -> float:
    """Mean log-loss plus ``l2_lambda * ||w||^2 / 2``; the bias is not penalised."""
    z = X @ w + b
    # log(1 + e^z) - y*z, stable for large |z|
    data = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(data + 0.5 * l2_lambda * np.dot(w, w))


def logistic_gradient(w, b, X, y, l2_lambda) -> tuple[np.ndarray, float]:
    r = sigmoid(X @ w + b) - y
    n = X.shape[0]
    return X.T @ r / n + l2_lambda * w, float(np.sum(r) / n)


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2_lambda: float = 1.0
    max_iter: int = 1000
    n_iter: int = 0
    loss_history: list[float] = field(default_factory=list, repr=False)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.weights.shape[0]:
            raise ValueError(f"expected {self.weights.shape[0]} features, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        p1 = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "l2_lambda": self.l2_lambda,
            "max_iter": self.max_iter,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, data: dict) -> LogisticModel:
        return cls(
            np.asarray(data["weights"], dtype=np.float64),
            float(data["bias"]),
            float(data["l2_lambda"]),
            int(data["max_iter"]),
            int(data["n_iter"]),
        )


def logreg_fit(ds: Dataset, l2_lambda: float = 1.0, max_iter: int = 1000, seed: int = 0, tol: float = 1e-6) -> LogisticModel:
    """Batch gradient descent with Armijo backtracking from a zero start.

    ``seed`` is accepted for interface symmetry; the optimiser is deterministic.
    """
    X = np.asarray(ds.features, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("logistic regression needs finite features")
    if ds.n_rows < 1:
        raise ValueError("cannot fit on an empty dataset")
    if l2_lambda < 0:
        raise ValueError("l2_lambda must be >= 0")
    y = ds.labels.astype(np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    loss = logistic_loss(w, b, X, y, l2_lambda)
    history = [loss]
    step = 1.0
    it = 0
    while it < max_iter:
        gw, gb = logistic_gradient(w, b, X, y, l2_lambda)
        gnorm2 = float(np.dot(gw, gw) + gb * gb)
        if np.sqrt(gnorm2) < tol:
            break
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss = logistic_loss(w_new, b_new, X, y, l2_lambda)
            if new_loss <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        if new_loss > loss:
            break
        w, b, loss = w_new, b_new, new_loss
        history.append(loss)
        step = min(step * 2.0, 1e6)
        it += 1
    return LogisticModel(w, b, l2_lambda, max_iter, it, history)


def logreg_predict_proba(model: LogisticModel, row) -> np.ndarray:
    return model.predict_proba(np.asarray(row, dtype=np.float64).reshape(1, -1))[0]
