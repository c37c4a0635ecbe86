"""Performance and group-fairness metrics.

Groups are encoded privileged=1, unprivileged=0. Fairness differences are
signed (unprivileged minus privileged); a rate that cannot be computed
because its conditioning set is empty is reported as None, never as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: Confusion) -> Confusion:
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class GroupConfusion:
    unprivileged: Confusion
    privileged: Confusion

    @property
    def pooled(self) -> Confusion:
        return self.unprivileged + self.privileged

    def group(self, g: int) -> Confusion:
        return self.privileged if g == 1 else self.unprivileged


def confusion_by_group(
    y_true: Sequence[int] | np.ndarray,
    y_pred: Sequence[int] | np.ndarray,
    group: Sequence[int] | np.ndarray,
) -> GroupConfusion:
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    g = np.asarray(group, dtype=np.int64)
    if not (len(yt) == len(yp) == len(g)):
        raise ValueError(f"length mismatch: {len(yt)}, {len(yp)}, {len(g)}")
    if len(yt) == 0:
        raise ValueError("empty input")
    out = []
    for value in (0, 1):
        m = g == value
        t, p = yt[m], yp[m]
        out.append(
            Confusion(
                tp=int(np.sum((t == 1) & (p == 1))),
                fp=int(np.sum((t == 0) & (p == 1))),
                tn=int(np.sum((t == 0) & (p == 0))),
                fn=int(np.sum((t == 1) & (p == 0))),
            )
        )
    return GroupConfusion(unprivileged=out[0], privileged=out[1])


def performance(conf: GroupConfusion) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1) on the pooled counts; empty ratios count as 0."""
    c = conf.pooled
    if c.n == 0:
        raise ValueError("no rows")
    acc = (c.tp + c.tn) / c.n
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return acc, precision, recall, f1


def _rate(num: int, den: int) -> float | None:
    return num / den if den else None


def _diff(a: float | None, b: float | None) -> float | None:
    return None if a is None or b is None else a - b


def fairness(conf: GroupConfusion) -> tuple[float | None, float | None, float | None]:
    """(spd, aod, eod), each unprivileged minus privileged.

    spd = P(pred=1 | A=0) - P(pred=1 | A=1)
    eod = TPR_0 - TPR_1
    aod = ((FPR_0 - FPR_1) + (TPR_0 - TPR_1)) / 2
    """
    u, p = conf.unprivileged, conf.privileged
    spd = _diff(_rate(u.tp + u.fp, u.n), _rate(p.tp + p.fp, p.n))
    eod = _diff(_rate(u.tp, u.tp + u.fn), _rate(p.tp, p.tp + p.fn))
    fpr_d = _diff(_rate(u.fp, u.fp + u.tn), _rate(p.fp, p.fp + p.tn))
    aod = None if eod is None or fpr_d is None else 0.5 * (fpr_d + eod)
    return spd, aod, eod


PERFORMANCE_NAMES = ("accuracy", "precision", "recall", "f1")
FAIRNESS_NAMES = ("spd", "aod", "eod")


@dataclass(frozen=True)
class MetricBundle:
    """Pooled performance plus one signed (spd, aod, eod) triple per protected feature.

    The top-level ``spd``/``aod``/``eod`` refer to the first protected feature.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    groups: Mapping[str, tuple[float | None, float | None, float | None]]

    @property
    def spd(self) -> float | None:
        return next(iter(self.groups.values()))[0]

    @property
    def aod(self) -> float | None:
        return next(iter(self.groups.values()))[1]

    @property
    def eod(self) -> float | None:
        return next(iter(self.groups.values()))[2]

    def value(self, name: str, feature: str | None = None) -> float | None:
        if name in PERFORMANCE_NAMES:
            return getattr(self, name)
        triple = self.groups[feature] if feature else next(iter(self.groups.values()))
        return triple[FAIRNESS_NAMES.index(name)]

    def composite_fairness(self) -> float | None:
        """Mean of |spd|, |aod|, |eod| over all protected features; None if any is undefined."""
        vals = [v for t in self.groups.values() for v in t]
        if not vals or any(v is None for v in vals):
            return None
        return float(np.mean([abs(v) for v in vals]))  # type: ignore[arg-type]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fairness": {
                f: {"spd": t[0], "aod": t[1], "eod": t[2]} for f, t in self.groups.items()
            },
            "composite_fairness": self.composite_fairness(),
        }


def evaluate_predictions(
    y_true: np.ndarray, y_pred: np.ndarray, groups: Mapping[str, np.ndarray]
) -> MetricBundle:
    if not groups:
        raise ValueError("need at least one protected feature")
    confs = {f: confusion_by_group(y_true, y_pred, g) for f, g in groups.items()}
    acc, prec, rec, f1 = performance(next(iter(confs.values())))
    return MetricBundle(acc, prec, rec, f1, {f: fairness(c) for f, c in confs.items()})
