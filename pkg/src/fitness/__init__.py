"""Causality-based pre-processing bias mitigation for tabular classifiers."""

__version__ = "0.1.0"

from .causal import CausalError, CausalReport, FeatureBias, ace, acd, build_strata, identify_bias
from .data import (
    DataError,
    Dataset,
    EncodedDataset,
    Schema,
    SchemaError,
    SynthSpec,
    encode,
    load_dataset,
    load_schema,
    parse_schema,
    parse_synth_spec,
    split,
    synth_biased,
)
from .decorrelate import MutationOutcome, MutationPlan, Strategy, mutate, residual_acd
from .evaluate import (
    ExperimentConfig,
    ExperimentError,
    FaireaBaseline,
    RunReport,
    TradeoffVerdict,
    classify_tradeoff,
    fairea_baseline,
    mann_whitney_u,
    reweigh,
    roc_postprocess,
    run_experiment,
)
from .metrics import MetricBundle, confusion_by_group, evaluate_predictions, fairness, performance
from .models import ClassifierSpec, ModelError, TrainedModel, fit, predict, predict_scores
from .optimize import ObjectiveWeights, PsoParams, fitness_fit, objective, pso_search, search_alpha
from .report import write_report

__all__ = [
    "CausalError", "CausalReport", "ClassifierSpec", "DataError", "Dataset", "EncodedDataset",
    "ExperimentConfig", "ExperimentError", "FaireaBaseline", "FeatureBias", "MetricBundle",
    "ModelError", "MutationOutcome", "MutationPlan", "ObjectiveWeights", "PsoParams", "RunReport",
    "Schema", "SchemaError", "Strategy", "SynthSpec", "TradeoffVerdict", "TrainedModel",
    "__version__", "ace", "acd", "build_strata", "classify_tradeoff", "confusion_by_group",
    "encode", "evaluate_predictions", "fairea_baseline", "fairness", "fit", "fitness_fit",
    "identify_bias", "load_dataset", "load_schema", "mann_whitney_u", "mutate", "objective",
    "parse_schema", "parse_synth_spec", "performance", "predict", "predict_scores", "pso_search",
    "residual_acd", "reweigh", "roc_postprocess", "run_experiment", "search_alpha", "split",
    "synth_biased", "write_report",
]
