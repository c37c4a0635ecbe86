"""Backdoor-adjusted causal effect of a sensitive feature on the label.

The intervened probability of a label given a forced sensitive value is
estimated by the adjustment formula over the declared strata::

    P(Y=y | do(T=t)) = sum_z P(Y=y | T=t, Z=z) * P(Z=z)

With no strata columns there is a single stratum and the estimate reduces
to the plain conditional frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import EncodedDataset


class CausalError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StrataTable:
    """Counts per (sensitive value, stratum) for one protected feature.

    ``counts[t, k]`` is the number of rows with T=t in the k-th stratum,
    ``positives[t, k]`` how many of those carry the favorable label.
    """

    feature: str
    strata: tuple[int, ...]
    weights: np.ndarray
    counts: np.ndarray
    positives: np.ndarray
    smoothing: float
    n: int

    def conditional(self, y: int, t: int, k: int) -> float | None:
        """Smoothed P(Y=y | T=t, Z=z_k); None for an empty cell without smoothing."""
        c = self.counts[t, k]
        if c == 0 and self.smoothing == 0:
            return None
        p1 = (self.positives[t, k] + self.smoothing) / (c + 2 * self.smoothing)
        return float(p1 if y == 1 else 1.0 - p1)

    def marginal(self, y: int, t: int) -> float | None:
        """Unadjusted P(Y=y | T=t) over all rows."""
        c = self.counts[t].sum()
        if c == 0:
            return None
        p1 = self.positives[t].sum() / c
        return float(p1 if y == 1 else 1.0 - p1)

    def empty_cells(self, t: int) -> list[int]:
        if self.smoothing > 0:
            return []
        return [self.strata[k] for k in range(len(self.strata)) if self.counts[t, k] == 0]


def build_strata(train: EncodedDataset, feature: str, smoothing: float = 0.0) -> StrataTable:
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    if train.n < 1:
        raise CausalError("cannot build strata on an empty dataset")
    if feature not in train.sensitive:
        raise CausalError(f"{feature!r} is not a protected feature of this dataset")
    t = train.sensitive[feature]
    y = train.label
    strata, zi = np.unique(train.strata_key, return_inverse=True)
    k = len(strata)
    counts = np.zeros((2, k), dtype=np.int64)
    positives = np.zeros((2, k), dtype=np.int64)
    np.add.at(counts, (t, zi), 1)
    np.add.at(positives, (t, zi), y)
    weights = counts.sum(axis=0) / train.n
    return StrataTable(
        feature=feature,
        strata=tuple(int(s) for s in strata),
        weights=weights,
        counts=counts,
        positives=positives,
        smoothing=float(smoothing),
        n=train.n,
    )


def ace(table: StrataTable, y: int, t: int) -> float:
    """Average causal effect P(Y=y | do(T=t)).

    Without smoothing, a stratum that has no rows with T=t borrows the
    unadjusted P(Y=y | T=t) for its share of the sum.
    """
    total = 0.0
    fallback = None
    for k, w in enumerate(table.weights):
        p = table.conditional(y, t, k)
        if p is None:
            if fallback is None:
                fallback = table.marginal(y, t)
                if fallback is None:
                    raise CausalError(f"no rows with {table.feature}={t}; effect undefined")
            p = fallback
        total += p * w
    return total


def acd(table: StrataTable, y: int, t_j: int, t_k: int) -> float:
    """Average causal difference ACE(y, t_j) - ACE(y, t_k)."""
    return ace(table, y, t_j) - ace(table, y, t_k)


@dataclass(frozen=True)
class FeatureBias:
    feature: str
    ace: dict[str, float]
    acd: float
    marginal_gap: float
    privileged_inferred: int
    group_counts: dict[str, int]
    n_strata: int
    fallback_strata: dict[str, list[int]] = field(default_factory=dict)

    @property
    def simpson(self) -> bool:
        """True when the unadjusted gap and the adjusted difference point in opposite directions."""
        return self.marginal_gap * self.acd < 0

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "ace": dict(self.ace),
            "acd": self.acd,
            "marginal_gap": self.marginal_gap,
            "simpson_flag": self.simpson,
            "privileged_inferred": self.privileged_inferred,
            "group_counts": dict(self.group_counts),
            "n_strata": self.n_strata,
            "fallback_strata": {k: list(v) for k, v in self.fallback_strata.items()},
        }


@dataclass(frozen=True)
class CausalReport:
    """Bias identification output; ``acd`` is ACD(y=1; t=1, t=0) per protected feature."""

    features: dict[str, FeatureBias]
    smoothing: float

    def __getitem__(self, feature: str) -> FeatureBias:
        return self.features[feature]

    def to_dict(self) -> dict:
        return {
            "kind": "causal_report",
            "smoothing": self.smoothing,
            "features": [fb.to_dict() for fb in self.features.values()],
        }


def _feature_bias(table: StrataTable) -> FeatureBias:
    aces = {f"y{y}_t{t}": ace(table, y, t) for y in (0, 1) for t in (0, 1)}
    d = aces["y1_t1"] - aces["y1_t0"]
    gap = table.marginal(1, 1) - table.marginal(1, 0)  # type: ignore[operator]
    # ties go to the declared privileged value, which encoding maps to 1
    inferred = 0 if aces["y1_t0"] > aces["y1_t1"] else 1
    return FeatureBias(
        feature=table.feature,
        ace=aces,
        acd=d,
        marginal_gap=gap,
        privileged_inferred=inferred,
        group_counts={"t0": int(table.counts[0].sum()), "t1": int(table.counts[1].sum())},
        n_strata=len(table.strata),
        fallback_strata={f"t{t}": table.empty_cells(t) for t in (0, 1) if table.empty_cells(t)},
    )


def identify_bias(train: EncodedDataset, smoothing: float = 0.0) -> CausalReport:
    """Estimate ACE/ACD for every protected feature and infer the privileged value."""
    out = {}
    for feature in train.protected:
        s = train.sensitive[feature]
        if train.n == 0 or s.min() == s.max():
            raise CausalError(f"protected feature {feature!r} takes only one value in this data")
        out[feature] = _feature_bias(build_strata(train, feature, smoothing))
    return CausalReport(features=out, smoothing=float(smoothing))
