"""Comparison methods: reweighing (pre-processing) and reject option classification (post-processing)."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..data import EncodedDataset


def reweigh_table(group: np.ndarray, label: np.ndarray) -> dict[tuple[int, int], Fraction]:
    """Exact weight per (group, label) cell: P(A=a) P(Y=y) / P(A=a, Y=y)."""
    a = np.asarray(group, dtype=np.int64)
    y = np.asarray(label, dtype=np.int64)
    n = len(a)
    table = {}
    for av in (0, 1):
        for yv in (0, 1):
            n_ay = int(np.sum((a == av) & (y == yv)))
            if n_ay == 0:
                raise ValueError(f"reweighing cell (A={av}, Y={yv}) is empty")
            table[(av, yv)] = Fraction(int(np.sum(a == av)) * int(np.sum(y == yv)), n * n_ay)
    return table


def reweigh(train: EncodedDataset, feature: str | None = None) -> np.ndarray:
    """Per-row weights that make the protected feature and the label independent
    under the weighted empirical distribution."""
    feature = feature or train.protected[0]
    a = train.sensitive[feature]
    table = reweigh_table(a, train.label)
    w = np.empty(train.n)
    for (av, yv), f in table.items():
        w[(a == av) & (train.label == yv)] = float(f)
    return w


def roc_postprocess(scores: np.ndarray, groups: np.ndarray, theta: float = 0.1) -> np.ndarray:
    """Reject option classification with a fixed critical band.

    Inside ``|score - 0.5| < theta``, privileged rows are labelled 0 and
    unprivileged rows 1; elsewhere the usual 0.5 threshold applies.
    """
    if not 0.0 < theta <= 0.5:
        raise ValueError(f"theta must lie in (0, 0.5], got {theta}")
    s = np.asarray(scores, dtype=float)
    g = np.asarray(groups, dtype=np.int64)
    if s.shape != g.shape:
        raise ValueError("scores and groups lengths differ")
    pred = (s >= 0.5).astype(np.int64)
    band = np.abs(s - 0.5) < theta
    pred[band & (g == 1)] = 0
    pred[band & (g == 0)] = 1
    return pred
