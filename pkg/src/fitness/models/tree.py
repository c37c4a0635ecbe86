"""CART classification trees (Gini) and a bagged random forest."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree. Internal nodes have ``feature >= 0``; rows with
    ``x[feature] <= threshold`` go left. ``value`` is the weighted fraction
    of favorable labels at the node."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            r = rows[inner]
            nd = node[inner]
            go_left = X[r, feat[inner]] <= self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])
        return self.value[node]


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    idx: np.ndarray,
    features: np.ndarray,
    min_leaf: int,
) -> tuple[int, float, np.ndarray] | None:
    """Lowest weighted-Gini split over ``features``; earlier features and
    smaller thresholds win ties."""
    best = None
    best_imp = math.inf
    m = len(idx)
    for j in features:
        xj = X[idx, j]
        order = np.argsort(xj, kind="mergesort")
        xs = xj[order]
        ws = w[idx][order]
        ps = ws * y[idx][order]
        cw = np.cumsum(ws)[:-1]
        cp = np.cumsum(ps)[:-1]
        W, P = ws.sum(), ps.sum()
        pos = np.arange(1, m)  # left size
        ok = (xs[:-1] < xs[1:]) & (pos >= min_leaf) & (m - pos >= min_leaf)
        if not ok.any():
            continue
        wl, pl = cw, cp
        wr, pr = W - wl, P - pl
        with np.errstate(divide="ignore", invalid="ignore"):
            imp = 2.0 * pl * (1.0 - pl / wl) + 2.0 * pr * (1.0 - pr / wr)
        imp = np.where(ok & (wl > 0) & (wr > 0), imp, math.inf)
        k = int(np.argmin(imp))
        if imp[k] < best_imp:
            best_imp = float(imp[k])
            thr = 0.5 * (xs[k] + xs[k + 1])
            best = (int(j), float(thr), idx[X[idx, j] <= thr])
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    max_depth: int = 10,
    min_leaf: int = 5,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a CART tree on rows of ``X`` with sample weights ``w``.

    With ``max_features`` set, each split considers that many features drawn
    without replacement by ``rng`` and then scanned in index order.
    """
    d = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node(idx: np.ndarray) -> int:
        ww = w[idx].sum()
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float((w[idx] * y[idx]).sum() / ww) if ww > 0 else 0.0)
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        v = value[node]
        if depth >= max_depth or len(idx) < 2 * min_leaf or v in (0.0, 1.0):
            continue
        if max_features is not None and max_features < d:
            feats = np.sort(rng.choice(d, size=max_features, replace=False))  # type: ignore[union-attr]
        else:
            feats = np.arange(d)
        found = _best_split(X, y, w, idx, feats, min_leaf)
        if found is None:
            continue
        j, thr, lidx = found
        ridx = np.setdiff1d(idx, lidx, assume_unique=True)
        feature[node] = j
        threshold[node] = thr
        left[node] = new_node(lidx)
        right[node] = new_node(ridx)
        stack.append((right[node], ridx, depth + 1))
        stack.append((left[node], lidx, depth + 1))

    return Tree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value),
    )


def grow_forest(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray | None,
    n_trees: int,
    max_depth: int,
    min_leaf: int,
    max_features: int | None,
    bootstrap: bool,
    seed: int,
) -> list[Tree]:
    n = X.shape[0]
    p = None if w is None else w / w.sum()
    trees = []
    for ss in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(ss)
        if bootstrap:
            rows = rng.choice(n, size=n, replace=True, p=p)
        else:
            rows = np.arange(n)
        unit = np.ones(len(rows)) if bootstrap or w is None else w
        trees.append(grow_tree(X[rows], y[rows], unit, max_depth, min_leaf, max_features, rng))
    return trees


def forest_scores(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    votes = np.zeros(X.shape[0])
    for t in trees:
        votes += t.leaf_values(X) >= 0.5
    return votes / len(trees)
