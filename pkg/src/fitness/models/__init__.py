"""Self-contained classifiers behind one fit/predict interface.

Kinds: ``lr`` (logistic regression), ``lsvm`` (linear SVM), ``dt`` (CART
tree) and ``rf`` (random forest). Scores lie in [0, 1] and a row is labelled
1 iff its score is at least 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..data import EncodedDataset
from .linear import fit_linear_svm, fit_logistic, linear_scores
from .tree import Tree, forest_scores, grow_forest, grow_tree

KINDS = ("lr", "lsvm", "dt", "rf")

DEFAULTS: dict[str, dict[str, Any]] = {
    "lr": {"C": 1.0, "max_iter": 500, "tol": 1e-6},
    "lsvm": {"C": 1.0, "epochs": 500},
    "dt": {"max_depth": 10, "min_leaf": 5},
    "rf": {"n_trees": 100, "max_depth": 10, "min_leaf": 5, "max_features": "sqrt", "bootstrap": True},
}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "lr"
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        kind = self.kind.lower()
        if kind == "svm":
            kind = "lsvm"
        if kind not in KINDS:
            raise ModelError(f"unknown classifier kind {self.kind!r}; choose from {KINDS}")
        unknown = set(self.params) - set(DEFAULTS[kind])
        if unknown:
            raise ModelError(f"unknown {kind} hyperparameter(s) {sorted(unknown)}")
        merged = {**DEFAULTS[kind], **self.params}
        for key in ("C", "tol"):
            if key in merged and not merged[key] > 0:
                raise ModelError(f"{key} must be positive")
        for key in ("max_iter", "epochs", "max_depth", "min_leaf", "n_trees"):
            if key in merged and int(merged[key]) < 1:
                raise ModelError(f"{key} must be >= 1")
        mf = merged.get("max_features")
        if mf is not None and mf not in ("sqrt", "all") and not (isinstance(mf, int) and mf >= 1):
            raise ModelError("max_features must be 'sqrt', 'all' or a positive integer")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", merged)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    n_features: int
    params: Mapping[str, Any]
    column_order: np.ndarray | None = None
    sample_weights: np.ndarray | None = None

    def _check(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ModelError(
                f"expected a matrix with {self.n_features} columns, got shape {rows.shape}"
            )
        return rows


def _weights(train: EncodedDataset, weights: np.ndarray | None) -> np.ndarray | None:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float)
    if w.shape != (train.n,):
        raise ModelError(f"weights length {w.shape} does not match {train.n} rows")
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise ModelError("sample weights must be positive and finite")
    return w


def fit(spec: ClassifierSpec, train: EncodedDataset, weights: np.ndarray | None = None) -> TrainedModel:
    """Train a classifier; deterministic for a given spec, data and weights."""
    if train.n < 2:
        raise ModelError("need at least 2 training rows")
    y = train.label.astype(float)
    if y.min() == y.max():
        raise ModelError("training labels contain a single class")
    w = _weights(train, weights)
    X = np.asarray(train.features, dtype=float)
    d = X.shape[1]
    p = spec.params
    unit = np.ones(train.n) if w is None else w

    if spec.kind == "lr":
        coef, b, iters = fit_logistic(X, y, unit, p["C"], int(p["max_iter"]), p["tol"])
        params: dict[str, Any] = {"coef": coef, "intercept": b, "iterations": iters}
        return TrainedModel("lr", d, params, sample_weights=w)
    if spec.kind == "lsvm":
        coef, b = fit_linear_svm(X, y, unit, p["C"], int(p["epochs"]))
        return TrainedModel("lsvm", d, {"coef": coef, "intercept": b}, sample_weights=w)

    # trees see columns in name order so results do not depend on column order
    order = np.array(sorted(range(d), key=lambda j: train.feature_names[j]), dtype=np.intp)
    Xc = X[:, order]
    if spec.kind == "dt":
        tree = grow_tree(Xc, y, unit, int(p["max_depth"]), int(p["min_leaf"]))
        return TrainedModel("dt", d, {"trees": [tree]}, column_order=order, sample_weights=w)
    mf = p["max_features"]
    m = None if mf == "all" else (max(1, math.ceil(math.sqrt(d))) if mf == "sqrt" else int(mf))
    trees = grow_forest(
        Xc, y, w, int(p["n_trees"]), int(p["max_depth"]), int(p["min_leaf"]), m,
        bool(p["bootstrap"]), spec.seed,
    )
    return TrainedModel("rf", d, {"trees": trees}, column_order=order, sample_weights=w)


def predict_scores(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    """Scores in [0, 1]: sigmoid of the margin for linear kinds, leaf
    favorable fraction for ``dt`` and vote fraction for ``rf``."""
    X = model._check(rows)
    if model.kind in ("lr", "lsvm"):
        return linear_scores(X, model.params["coef"], model.params["intercept"])
    Xc = X[:, model.column_order]
    if model.kind == "dt":
        return model.params["trees"][0].leaf_values(Xc)
    return forest_scores(model.params["trees"], Xc)


def predict(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    return (predict_scores(model, rows) >= 0.5).astype(np.int64)


def dump_model(model: TrainedModel, path: str | Path) -> None:
    """Write a plain-text parameter listing: kind, dimension, then parameters."""
    lines = [f"kind {model.kind}", f"n_features {model.n_features}"]
    if model.kind in ("lr", "lsvm"):
        lines.append(f"intercept {model.params['intercept']!r}")
        lines.append("coef " + " ".join(repr(float(c)) for c in model.params["coef"]))
    else:
        lines.append("column_order " + " ".join(str(int(j)) for j in model.column_order))  # type: ignore[union-attr]
        for i, t in enumerate(model.params["trees"]):
            lines.append(f"tree {i} nodes {t.node_count}")
            for k in range(t.node_count):
                lines.append(
                    f"  {k} {int(t.feature[k])} {float(t.threshold[k])!r} "
                    f"{int(t.left[k])} {int(t.right[k])} {float(t.value[k])!r}"
                )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


__all__ = [
    "ClassifierSpec",
    "ModelError",
    "TrainedModel",
    "Tree",
    "dump_model",
    "fit",
    "predict",
    "predict_scores",
]
