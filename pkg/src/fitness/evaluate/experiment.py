"""Repeated split/train/mitigate/measure runs with significance testing."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from ..causal import CausalError
from ..data import DataError, Dataset, EncodedDataset, encode, split
from ..decorrelate import Strategy
from ..metrics import FAIRNESS_NAMES, PERFORMANCE_NAMES, MetricBundle, evaluate_predictions
from ..models import ClassifierSpec, ModelError, fit, predict, predict_scores
from ..optimize import ObjectiveWeights, PsoParams, fitness_fit
from .baselines import reweigh, roc_postprocess
from .fairea import DEFAULT_DEGREES, REGIONS, baseline_from_predictions, classify_bundle
from .stats import mann_whitney_u

METHODS = ("default", "fitness", "rew", "roc")
SIGNIFICANCE_LEVEL = 0.05
MAX_FAILED_SHARE = 0.2


class ExperimentError(RuntimeError):
    """Raised when too many repeats fail; carries the partial report."""

    def __init__(self, message: str, report: RunReport | None = None):
        super().__init__(message)
        self.report = report


def normalize_methods(methods: Sequence[str]) -> tuple[str, ...]:
    """Lower-case, deduplicate and order methods; the default model is always included."""
    names = {m.strip().lower() for m in methods if m.strip()}
    unknown = names - set(METHODS)
    if unknown:
        raise ValueError(f"unknown method(s) {sorted(unknown)}; choose from {METHODS}")
    return tuple(m for m in METHODS if m in names or m == "default")


def repeat_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Dataset
    protected: tuple[str, ...] | None = None
    model: str = "lr"
    model_params: Mapping[str, Any] = field(default_factory=dict)
    methods: tuple[str, ...] = ("default", "fitness")
    repeats: int = 50
    weights: ObjectiveWeights = ObjectiveWeights()
    pso: PsoParams = PsoParams()
    seed: int = 0
    test_fraction: float = 0.3
    strategy: Strategy = Strategy.FLIP_SENSITIVE
    smoothing: float = 0.0
    include_sensitive: bool = True
    roc_theta: float = 0.1
    fairea_repeats: int = 10
    kfold: int | None = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.repeats < 0:
            raise ValueError("repeats must be >= 0")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        object.__setattr__(self, "methods", normalize_methods(self.methods))
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        ClassifierSpec(self.model, self.model_params)  # validate early

    def echo(self) -> dict:
        ds = self.dataset
        protected = list(self.protected) if self.protected is not None else list(ds.schema.sensitive_names)
        return {
            "dataset": {"source": ds.source_name, "schema": ds.schema.name, "rows": ds.n, "dropped": ds.dropped},
            "protected": protected,
            "model": ClassifierSpec(self.model, self.model_params).kind,
            "model_params": {k: v for k, v in sorted(ClassifierSpec(self.model, self.model_params).params.items())},
            "methods": list(self.methods),
            "repeats": self.repeats,
            "weights": {"performance": self.weights.w_perf, "fairness": self.weights.w_fair},
            "pso": {
                "population": self.pso.population,
                "iterations": self.pso.iterations,
                "inertia": self.pso.inertia,
                "c1": self.pso.c1,
                "c2": self.pso.c2,
                "v_max": self.pso.v_max,
            },
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "strategy": self.strategy.value,
            "smoothing": self.smoothing,
            "include_sensitive": self.include_sensitive,
            "roc_theta": self.roc_theta,
            "fairea_repeats": self.fairea_repeats,
            "kfold": self.kfold,
        }


def _pair_key(pair: tuple[str, str]) -> str:
    return f"{pair[0]}:{pair[1]}"


def _rew_weights(train: EncodedDataset) -> np.ndarray:
    # several protected features: weights multiply
    w = np.ones(train.n)
    for f in train.protected:
        w = w * reweigh(train, f)
    return w


def run_repeat(config: ExperimentConfig, encoded: EncodedDataset, index: int) -> dict:
    """One repeat; errors are caught and reported in the returned record."""
    seed = repeat_seed(config.seed, index)
    record: dict[str, Any] = {"index": index, "seed": seed, "status": "ok", "error": None}
    try:
        sp = split(encoded, config.test_fraction, seed)
        train, test = sp.train, sp.test
        spec = ClassifierSpec(config.model, config.model_params, seed)
        groups = test.sensitive
        base_model = fit(spec, train)
        base_pred = predict(base_model, test.features)
        bundles: dict[str, MetricBundle] = {"default": evaluate_predictions(test.label, base_pred, groups)}
        fitness_info = None

        for method in config.methods:
            if method == "fitness":
                res = fitness_fit(
                    train, spec, config.weights, replace(config.pso, seed=seed),
                    config.strategy, config.smoothing, seed, config.kfold,
                )
                pred = predict(res.model, test.features)
                fitness_info = {
                    "alpha": dict(zip(train.protected, res.search.best_alpha)),
                    "n_mutated": dict(res.outcome.n_mutated),
                    "acd_before": dict(res.outcome.acd_before),
                    "acd_after": dict(res.outcome.acd_after),
                    "search": res.search.to_dict(),
                }
            elif method == "rew":
                pred = predict(fit(spec, train, _rew_weights(train)), test.features)
            elif method == "roc":
                first = train.protected[0]
                scores = predict_scores(base_model, test.features)
                pred = roc_postprocess(scores, test.sensitive[first], config.roc_theta)
            else:
                continue
            bundles[method] = evaluate_predictions(test.label, pred, groups)

        fairea: dict[str, dict[str, str | None]] = {}
        if len(config.methods) > 1:
            baselines = baseline_from_predictions(
                test.label, base_pred, groups, DEFAULT_DEGREES, config.fairea_repeats, seed
            )
            for method, b in bundles.items():
                if method == "default":
                    continue
                verdicts = classify_bundle(b, baselines)
                fairea[method] = {_pair_key(p): (v.region if v else None) for p, v in verdicts.items()}

        record["metrics"] = {m: b.to_dict() for m, b in bundles.items()}
        record["fitness"] = fitness_info
        record["fairea"] = fairea
    except (DataError, ModelError, CausalError, ValueError, FloatingPointError) as exc:
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}", metrics={}, fitness=None, fairea={})
    return record


def mean(values: Sequence[float]) -> float | None:
    """Arithmetic mean by compensated summation; None for an empty list."""
    return math.fsum(values) / len(values) if values else None


def metric_series(records: Sequence[dict], method: str, name: str, feature: str | None = None) -> list[float]:
    """Per-repeat values of a metric over successful repeats, skipping undefined ones.

    ``name`` is a performance metric, ``composite_fairness``, or a fairness
    metric optionally prefixed with ``abs_`` (requires ``feature``).
    """
    out = []
    for r in records:
        if r["status"] != "ok" or method not in r["metrics"]:
            continue
        m = r["metrics"][method]
        if name in PERFORMANCE_NAMES or name == "composite_fairness":
            v = m[name]
        else:
            base = name[4:] if name.startswith("abs_") else name
            v = m["fairness"][feature][base]
            if v is not None and name.startswith("abs_"):
                v = abs(v)
        if v is not None:
            out.append(v)
    return out


def aggregate(records: Sequence[dict], methods: Sequence[str], features: Sequence[str]) -> dict:
    agg: dict[str, Any] = {}
    for method in methods:
        entry: dict[str, Any] = {
            "n_repeats": sum(1 for r in records if r["status"] == "ok" and method in r["metrics"])
        }
        for name in (*PERFORMANCE_NAMES, "composite_fairness"):
            entry[name] = mean(metric_series(records, method, name))
        entry["fairness"] = {
            f: {
                key: mean(metric_series(records, method, key, f))
                for base in FAIRNESS_NAMES
                for key in (base, "abs_" + base)
            }
            for f in features
        }
        agg[method] = entry
    return agg


def significance(records: Sequence[dict], methods: Sequence[str]) -> dict:
    """Default vs each method on per-repeat composite fairness and accuracy."""
    out: dict[str, Any] = {}
    for method in methods:
        if method == "default":
            continue
        block = {}
        for name in ("composite_fairness", "accuracy"):
            a = metric_series(records, "default", name)
            b = metric_series(records, method, name)
            if not a or not b:
                block[name] = None
                continue
            res = mann_whitney_u(a, b)
            block[name] = {**res.to_dict(), "significant": res.p < SIGNIFICANCE_LEVEL}
        out[method] = block
    return out


def fairea_summary(records: Sequence[dict], methods: Sequence[str]) -> dict:
    """Region counts, plus beat rates counted per metric pair and per model.

    A model (one method in one repeat) beats the baseline when more than
    half of its classified metric pairs land in win-win or good.
    """
    out: dict[str, Any] = {}
    for method in methods:
        if method == "default":
            continue
        counts = {r: 0 for r in REGIONS}
        models = beaten = 0
        for rec in records:
            if rec["status"] != "ok" or method not in rec["fairea"]:
                continue
            regions = [v for v in rec["fairea"][method].values() if v is not None]
            for v in regions:
                counts[v] += 1
            if regions:
                models += 1
                wins = sum(v in ("win-win", "good") for v in regions)
                beaten += 2 * wins > len(regions)
        total = sum(counts.values())
        out[method] = {
            "regions": counts,
            "pairs": total,
            "beat_rate_pairs": (counts["win-win"] + counts["good"]) / total if total else None,
            "models": models,
            "beat_rate_models": beaten / models if models else None,
        }
    return out


@dataclass(frozen=True)
class RunReport:
    config: dict
    repeats: tuple[dict, ...]
    aggregates: dict
    significance: dict
    fairea: dict

    @property
    def failed(self) -> int:
        return sum(1 for r in self.repeats if r["status"] != "ok")

    def to_dict(self) -> dict:
        return {
            "kind": "run_report",
            "config": self.config,
            "repeats": list(self.repeats),
            "aggregates": self.aggregates,
            "significance": self.significance,
            "fairea": self.fairea,
            "failed_repeats": self.failed,
        }


def build_report(config: ExperimentConfig, records: Sequence[dict], features: Sequence[str]) -> RunReport:
    return RunReport(
        config=config.echo(),
        repeats=tuple(records),
        aggregates=aggregate(records, config.methods, features),
        significance=significance(records, config.methods),
        fairea=fairea_summary(records, config.methods),
    )


def _run_one(args: tuple[ExperimentConfig, EncodedDataset, int]) -> dict:
    return run_repeat(*args)


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run every repeat and assemble the report.

    Raises ExperimentError (with the partial report attached) when more than
    20% of repeats fail.
    """
    encoded = encode(config.dataset, config.protected, include_sensitive=config.include_sensitive)
    jobs = [(config, encoded, r) for r in range(config.repeats)]
    if config.jobs > 1 and config.repeats > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(j) for j in jobs]
    report = build_report(config, records, encoded.protected)
    if report.failed > MAX_FAILED_SHARE * config.repeats:
        raise ExperimentError(f"{report.failed} of {config.repeats} repeats failed", report)
    return report
