"""Fairness/performance trade-off baseline built from prediction-mutated pseudo-models.

For a degree ``d`` a fraction ``d`` of the model's test predictions is
replaced by the test set's majority label. Averaging the resulting
``(|fairness|, performance)`` points over repeats gives one anchor per
degree; the anchors, ordered by degree, form the baseline polyline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..data import EncodedDataset
from ..metrics import FAIRNESS_NAMES, PERFORMANCE_NAMES, MetricBundle, evaluate_predictions
from ..models import TrainedModel, predict

DEFAULT_DEGREES = tuple(round(0.1 * i, 1) for i in range(11))
REGIONS = ("win-win", "good", "poor", "inverted", "lose-lose")
PAIRS = tuple((f, p) for f in FAIRNESS_NAMES for p in PERFORMANCE_NAMES)


@dataclass(frozen=True)
class FaireaBaseline:
    fairness: str
    performance: str
    degrees: tuple[float, ...]
    anchors: tuple[tuple[float, float], ...]  # (mean |fairness|, mean performance)
    repeats: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.anchors) < 2 or len(self.anchors) != len(self.degrees):
            raise ValueError("a baseline needs at least two anchors, one per degree")
        if list(self.degrees) != sorted(self.degrees):
            raise ValueError("anchors must be ordered by degree")

    @property
    def origin(self) -> tuple[float, float]:
        return self.anchors[0]

    def interpolate(self, fairness: float) -> float:
        """Baseline performance at a given |fairness| level.

        Uses the first segment (in degree order) whose fairness range holds
        the value; a flat-in-fairness segment yields the better of its two
        endpoints. Outside every segment the value is clamped onto the
        nearest segment, i.e. the performance of its closest endpoint.
        """
        best = None
        for (f0, p0), (f1, p1) in zip(self.anchors, self.anchors[1:]):
            lo, hi = min(f0, f1), max(f0, f1)
            if lo <= fairness <= hi:
                if f0 == f1:
                    return max(p0, p1)
                return p0 + (fairness - f0) * (p1 - p0) / (f1 - f0)
            edge = lo if fairness < lo else hi
            gap = abs(fairness - edge)
            if best is None or gap < best[0]:
                best = (gap, p0 if f0 == edge else p1)
        return best[1]  # type: ignore[index]

    def to_dict(self) -> dict:
        return {
            "fairness": self.fairness,
            "performance": self.performance,
            "degrees": list(self.degrees),
            "anchors": [list(a) for a in self.anchors],
            "repeats": self.repeats,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TradeoffVerdict:
    region: str
    point: tuple[float, float]
    baseline_performance: float

    @property
    def beats_baseline(self) -> bool:
        return self.region in ("win-win", "good")

    def to_dict(self) -> dict:
        return {
            "region": self.region,
            "point": list(self.point),
            "baseline_performance": self.baseline_performance,
        }


def classify_tradeoff(point: tuple[float, float], baseline: FaireaBaseline) -> TradeoffVerdict:
    """Place ``(|fairness|, performance)`` in one of five regions.

    Improvements are strict comparisons against the degree-0 anchor; a point
    that only improves fairness is ``good`` when its performance is at least
    the baseline's at the same fairness level, otherwise ``poor``.
    """
    f, p = float(point[0]), float(point[1])
    if not (math.isfinite(f) and math.isfinite(p)):
        raise ValueError(f"point must be finite, got {point}")
    f0, p0 = baseline.origin
    ref = baseline.interpolate(f)
    fair_up = f < f0
    perf_up = p > p0
    if fair_up and perf_up:
        region = "win-win"
    elif perf_up:
        region = "inverted"
    elif not fair_up:
        region = "lose-lose"
    else:
        region = "good" if p >= ref else "poor"
    return TradeoffVerdict(region, (f, p), ref)


def point_of(bundle: MetricBundle, fairness: str, performance: str, feature: str | None = None) -> tuple[float, float] | None:
    v = bundle.value(fairness, feature)
    if v is None:
        return None
    return abs(v), float(bundle.value(performance))  # type: ignore[arg-type]


def baseline_from_predictions(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    groups: Mapping[str, np.ndarray],
    degrees: Sequence[float] = DEFAULT_DEGREES,
    repeats: int = 10,
    seed: int = 0,
    feature: str | None = None,
) -> dict[tuple[str, str], FaireaBaseline]:
    """Build the baselines for all (fairness, performance) pairs from fixed predictions.

    Pairs whose fairness metric is undefined at some degree for every repeat
    are left out of the result.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    n = len(y_true)
    if n == 0:
        raise ValueError("empty test set")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    degrees = tuple(float(d) for d in degrees)
    if 0.0 not in degrees or 1.0 not in degrees:
        raise ValueError("degrees must include 0.0 and 1.0")
    if any(not 0.0 <= d <= 1.0 for d in degrees) or list(degrees) != sorted(set(degrees)):
        raise ValueError("degrees must be distinct, sorted and within [0, 1]")
    feature = feature or next(iter(groups))
    majority = 1 if 2 * int(y_true.sum()) >= n else 0
    rng = np.random.default_rng(seed)

    per_degree: list[list[MetricBundle]] = []
    for d in degrees:
        k = int(math.floor(d * n + 0.5))
        if k == 0 or k == n:
            # deterministic: no sampling needed, and no averaging noise
            pred = y_pred.copy() if k == 0 else np.full(n, majority)
            per_degree.append([evaluate_predictions(y_true, pred, groups)])
            continue
        bundles = []
        for _ in range(repeats):
            pred = y_pred.copy()
            pred[rng.choice(n, size=k, replace=False)] = majority
            bundles.append(evaluate_predictions(y_true, pred, groups))
        per_degree.append(bundles)

    out: dict[tuple[str, str], FaireaBaseline] = {}
    for fm, pm in PAIRS:
        anchors = []
        for bundles in per_degree:
            pts = [pt for b in bundles if (pt := point_of(b, fm, pm, feature)) is not None]
            if not pts:
                break
            if len(pts) == 1:
                anchors.append(pts[0])
            else:
                anchors.append((float(np.mean([a for a, _ in pts])), float(np.mean([b for _, b in pts]))))
        if len(anchors) == len(degrees):
            out[(fm, pm)] = FaireaBaseline(fm, pm, degrees, tuple(anchors), repeats, seed)
    return out


def fairea_baseline(
    model: TrainedModel,
    test: EncodedDataset,
    degrees: Sequence[float] = DEFAULT_DEGREES,
    repeats: int = 10,
    seed: int = 0,
    feature: str | None = None,
) -> dict[tuple[str, str], FaireaBaseline]:
    """Baselines for every metric pair from ``model``'s predictions on ``test``."""
    if test.n == 0:
        raise ValueError("empty test set")
    pred = predict(model, test.features)
    return baseline_from_predictions(test.label, pred, test.sensitive, degrees, repeats, seed, feature)


def classify_bundle(
    bundle: MetricBundle,
    baselines: Mapping[tuple[str, str], FaireaBaseline],
    feature: str | None = None,
) -> dict[tuple[str, str], TradeoffVerdict | None]:
    """Verdict per metric pair for one mitigated model; None where the point is undefined."""
    out: dict[tuple[str, str], TradeoffVerdict | None] = {}
    for pair in PAIRS:
        base = baselines.get(pair)
        pt = point_of(bundle, pair[0], pair[1], feature)
        out[pair] = None if base is None or pt is None else classify_tradeoff(pt, base)
    return out
