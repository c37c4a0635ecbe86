"""Instance mutation that pushes the causal difference of a training set toward zero."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .causal import CausalError, CausalReport, acd, build_strata
from .data import EncodedDataset


class Strategy(str, Enum):
    FLIP_SENSITIVE = "flip_sensitive"
    FLIP_LABEL = "flip_label"
    FLIP_BOTH = "flip_both"

    @classmethod
    def parse(cls, value: str | Strategy) -> Strategy:
        if isinstance(value, Strategy):
            return value
        key = value.strip().lower().replace("-", "_")
        aliases = {"flipsensitive": "flip_sensitive", "fliplabel": "flip_label", "flipboth": "flip_both"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown mutation strategy {value!r}") from None


@dataclass(frozen=True)
class MutationPlan:
    """One mutation fraction per protected feature.

    ``alpha[f]`` is the number of mutated rows divided by the total number
    of training rows.
    """

    alpha: Mapping[str, float]
    strategy: Strategy = Strategy.FLIP_SENSITIVE
    seed: int = 0

    def __post_init__(self) -> None:
        for f, a in self.alpha.items():
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha for {f!r} is {a}, outside [0, 1]")
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))


@dataclass(frozen=True, eq=False)
class MutationOutcome:
    """Result of applying a plan.

    ACD values are oriented from the inferred privileged value to the other
    value, so a positive ``acd_before`` means the data favours the
    privileged group.
    """

    mutated_train: EncodedDataset
    n_mutated: dict[str, int]
    acd_before: dict[str, float]
    acd_after: dict[str, float]
    privileged: dict[str, int]

    @property
    def delta_acd(self) -> dict[str, float]:
        return {f: self.acd_after[f] - self.acd_before[f] for f in self.acd_before}


def oriented_acd(train: EncodedDataset, feature: str, t_priv: int, smoothing: float) -> float:
    return acd(build_strata(train, feature, smoothing), 1, t_priv, 1 - t_priv)


def _acd_or_nan(train: EncodedDataset, feature: str, t_priv: int, smoothing: float) -> float:
    # mutation can empty a group entirely, leaving the difference undefined
    try:
        return oriented_acd(train, feature, t_priv, smoothing)
    except CausalError:
        return math.nan


def n_to_mutate(alpha: float, n_totals: int, donors: int) -> int:
    # round half up, then cap at the donor pool
    return min(int(math.floor(alpha * n_totals + 0.5)), donors)


def mutate(train: EncodedDataset, plan: MutationPlan, report: CausalReport) -> MutationOutcome:
    """Mutate privileged rows that carry the favorable label.

    For each protected feature, ``round(alpha * n)`` rows (capped at the
    donor pool) are drawn uniformly without replacement from the rows with
    T = privileged and Y = 1. ``FLIP_SENSITIVE`` moves them to the other
    sensitive value, ``FLIP_LABEL`` sets their label to 0, ``FLIP_BOTH``
    does both. Features are processed in plan order.
    """
    if set(plan.alpha) != set(report.features) or set(plan.alpha) - set(train.protected):
        raise ValueError(
            f"plan features {sorted(plan.alpha)} do not match report features {sorted(report.features)}"
        )
    strategy = Strategy.parse(plan.strategy)
    smoothing = report.smoothing
    features = list(plan.alpha)
    privileged = {f: report[f].privileged_inferred for f in features}
    before = {f: oriented_acd(train, f, privileged[f], smoothing) for f in features}

    streams = np.random.SeedSequence(plan.seed).spawn(len(features))
    current = train
    counts: dict[str, int] = {}
    for f, ss in zip(features, streams):
        t_priv = privileged[f]
        t = current.sensitive[f]
        donors = np.flatnonzero((t == t_priv) & (current.label == 1))
        m = n_to_mutate(plan.alpha[f], train.n, len(donors))
        counts[f] = m
        if m == 0:
            continue
        chosen = np.random.default_rng(ss).choice(donors, size=m, replace=False)
        new_t = None
        new_y = None
        if strategy in (Strategy.FLIP_SENSITIVE, Strategy.FLIP_BOTH):
            new_t = t.copy()
            new_t[chosen] = 1 - t_priv
        if strategy in (Strategy.FLIP_LABEL, Strategy.FLIP_BOTH):
            new_y = current.label.copy()
            new_y[chosen] = 0
        current = current.with_values(label=new_y, sensitive={f: new_t} if new_t is not None else None)

    after = (
        dict(before)
        if current is train
        else {f: _acd_or_nan(current, f, privileged[f], smoothing) for f in features}
    )
    return MutationOutcome(
        mutated_train=current,
        n_mutated=counts,
        acd_before=before,
        acd_after=after,
        privileged=privileged,
    )


def residual_acd(outcome: MutationOutcome, feature: str | None = None) -> float:
    """ACD left after mutation (first protected feature when none is named)."""
    if feature is None:
        feature = next(iter(outcome.acd_after))
    return outcome.acd_after[feature]
