"""Comparison methods, trade-off baseline, significance tests and the experiment harness."""

from .baselines import reweigh, reweigh_table, roc_postprocess
from .experiment import (
    METHODS,
    ExperimentConfig,
    ExperimentError,
    RunReport,
    aggregate,
    metric_series,
    repeat_seed,
    run_experiment,
    run_repeat,
)
from .fairea import (
    DEFAULT_DEGREES,
    PAIRS,
    REGIONS,
    FaireaBaseline,
    TradeoffVerdict,
    baseline_from_predictions,
    classify_bundle,
    classify_tradeoff,
    fairea_baseline,
)
from .stats import MannWhitneyResult, mann_whitney_u, midranks

__all__ = [
    "DEFAULT_DEGREES",
    "METHODS",
    "PAIRS",
    "REGIONS",
    "ExperimentConfig",
    "ExperimentError",
    "FaireaBaseline",
    "MannWhitneyResult",
    "RunReport",
    "TradeoffVerdict",
    "aggregate",
    "baseline_from_predictions",
    "classify_bundle",
    "classify_tradeoff",
    "fairea_baseline",
    "mann_whitney_u",
    "metric_series",
    "midranks",
    "repeat_seed",
    "reweigh",
    "reweigh_table",
    "roc_postprocess",
    "run_experiment",
    "run_repeat",
]
