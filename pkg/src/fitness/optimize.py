"""Weighted fairness/performance objective and particle swarm search over mutation fractions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .causal import CausalReport, identify_bias
from .data import EncodedDataset, split
from .decorrelate import MutationOutcome, MutationPlan, Strategy, mutate
from .metrics import evaluate_predictions
from .models import ClassifierSpec, ModelError, TrainedModel, fit, predict

UNDEFINED_PENALTY = 1.0


@dataclass(frozen=True)
class ObjectiveWeights:
    w_perf: float = 1.0
    w_fair: float = 1.0

    def __post_init__(self) -> None:
        if self.w_perf < 0 or self.w_fair < 0:
            raise ValueError("objective weights must be non-negative")
        if self.w_perf == 0 and self.w_fair == 0:
            raise ValueError("objective weights cannot both be zero")

    @classmethod
    def parse(cls, ratio: str) -> ObjectiveWeights:
        """Parse a ``performance:fairness`` ratio such as ``"30:1"`` or ``"0.1:1"``."""
        perf, sep, fair = ratio.partition(":")
        if not sep:
            raise ValueError(f"weights must look like P:F, got {ratio!r}")
        try:
            return cls(float(perf), float(fair))
        except ValueError as exc:
            raise ValueError(f"bad weight ratio {ratio!r}: {exc}") from None

    def __str__(self) -> str:
        return f"{self.w_perf:g}:{self.w_fair:g}"


@dataclass(frozen=True)
class PsoParams:
    population: int = 10
    iterations: int = 5
    inertia: float = 0.8
    c1: float = 0.5
    c2: float = 0.5
    v_max: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 1 or self.iterations < 1:
            raise ValueError("population and iterations must be >= 1")
        if min(self.inertia, self.c1, self.c2) <= 0:
            raise ValueError("inertia, c1 and c2 must be positive")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")


@dataclass(frozen=True)
class SearchResult:
    best_alpha: tuple[float, ...]
    best_score: float
    trace: tuple[float, ...]
    breakdown: dict | None = None
    evaluated: tuple[tuple[float, ...], ...] = field(default=(), repr=False)
    failures: int = 0

    def to_dict(self) -> dict:
        return {
            "best_alpha": list(self.best_alpha),
            "best_score": self.best_score,
            "trace": list(self.trace),
            "breakdown": self.breakdown,
            "evaluations": len(self.evaluated),
            "failures": self.failures,
        }


def pso_search(func: Callable[[np.ndarray], float], dim: int, params: PsoParams) -> SearchResult:
    """Maximise ``func`` over [0, 1]^dim with a global-best particle swarm.

    Each iteration evaluates every particle, updates personal and global
    bests, then moves the swarm with
    ``v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x)``, clipping each
    velocity component to ``v_max`` and each position to [0, 1]. Every
    particle draws from its own stream spawned from ``params.seed``.
    """
    if dim < 1:
        raise ValueError("search dimension must be >= 1")
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(params.seed).spawn(params.population)]
    x = np.array([r.uniform(0.0, 1.0, dim) for r in rngs])
    v = np.array([r.uniform(-0.1, 0.1, dim) for r in rngs])
    pbest = x.copy()
    pbest_score = np.full(params.population, -math.inf)
    gbest = x[0].copy()
    gbest_score = -math.inf
    trace: list[float] = []
    evaluated: list[tuple[float, ...]] = []
    failures = 0

    for it in range(params.iterations):
        for i in range(params.population):
            s = float(func(x[i].copy()))
            evaluated.append(tuple(float(a) for a in x[i]))
            if math.isnan(s) or s == -math.inf:
                failures += 1
                s = -math.inf
            if s > pbest_score[i]:
                pbest_score[i] = s
                pbest[i] = x[i]
            if s > gbest_score:
                gbest_score = s
                gbest = x[i].copy()
        trace.append(gbest_score)
        if it == params.iterations - 1:
            break
        for i, r in enumerate(rngs):
            r1, r2 = r.random(dim), r.random(dim)
            v[i] = (
                params.inertia * v[i]
                + params.c1 * r1 * (pbest[i] - x[i])
                + params.c2 * r2 * (gbest - x[i])
            )
            np.clip(v[i], -params.v_max, params.v_max, out=v[i])
            x[i] = np.clip(x[i] + v[i], 0.0, 1.0)

    return SearchResult(
        best_alpha=tuple(float(a) for a in gbest),
        best_score=gbest_score,
        trace=tuple(trace),
        evaluated=tuple(evaluated),
        failures=failures,
    )


@dataclass(frozen=True, eq=False)
class Fold:
    train: EncodedDataset
    val: EncodedDataset
    report: CausalReport


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    """Everything an objective evaluation needs besides the alpha vector."""

    folds: tuple[Fold, ...]
    spec: ClassifierSpec
    strategy: Strategy = Strategy.FLIP_SENSITIVE
    smoothing: float = 0.0
    mutation_seed: int = 0

    @property
    def features(self) -> tuple[str, ...]:
        return self.folds[0].train.protected


def make_context(
    train: EncodedDataset,
    spec: ClassifierSpec,
    strategy: Strategy | str = Strategy.FLIP_SENSITIVE,
    smoothing: float = 0.0,
    seed: int = 0,
    val_fraction: float = 0.2,
    kfold: int | None = None,
) -> ObjectiveContext:
    """Hold out ``val_fraction`` of ``train`` for scoring, or build ``kfold`` folds."""
    if kfold is None:
        sp = split(train, val_fraction, seed)
        folds = [(sp.train, sp.test)]
    else:
        if kfold < 2:
            raise ValueError("kfold must be >= 2")
        perm = np.random.default_rng(seed).permutation(train.n)
        parts = np.array_split(perm, kfold)
        folds = []
        for k in range(kfold):
            val_idx = np.sort(parts[k])
            tr_idx = np.sort(np.concatenate([parts[j] for j in range(kfold) if j != k]))
            folds.append((train.subset(tr_idx), train.subset(val_idx)))
    return ObjectiveContext(
        folds=tuple(Fold(tr, va, identify_bias(tr, smoothing)) for tr, va in folds),
        spec=spec,
        strategy=Strategy.parse(strategy),
        smoothing=smoothing,
        mutation_seed=seed,
    )


@dataclass(frozen=True)
class Evaluation:
    score: float
    f1: float | None = None
    accuracy: float | None = None
    abs_eod: float | None = None
    abs_aod: float | None = None
    failed: bool = False

    def breakdown(self) -> dict:
        return {"f1": self.f1, "accuracy": self.accuracy, "abs_eod": self.abs_eod, "abs_aod": self.abs_aod}


def _abs_or_penalty(v: float | None) -> float:
    return UNDEFINED_PENALTY if v is None else abs(v)


def evaluate_plan(alpha: Sequence[float], ctx: ObjectiveContext, w: ObjectiveWeights) -> Evaluation:
    """Score ``w_perf * (F1 + Acc) - w_fair * (|EOD| + |AOD|)`` on held-out data.

    With several protected features the fairness term is the mean over
    features; with several folds every term is averaged over folds. A
    mutated training set that cannot be fitted scores -inf.
    """
    alpha = [float(a) for a in alpha]
    if len(alpha) != len(ctx.features):
        raise ValueError(f"expected {len(ctx.features)} alpha values, got {len(alpha)}")
    if any(not 0.0 <= a <= 1.0 for a in alpha):
        raise ValueError("alpha values must lie in [0, 1]")
    plan = MutationPlan(dict(zip(ctx.features, alpha)), ctx.strategy, ctx.mutation_seed)
    f1s, accs, eods, aods = [], [], [], []
    for fold in ctx.folds:
        out = mutate(fold.train, plan, fold.report)
        try:
            model = fit(ctx.spec, out.mutated_train)
        except ModelError:
            return Evaluation(-math.inf, failed=True)
        pred = predict(model, fold.val.features)
        b = evaluate_predictions(fold.val.label, pred, fold.val.sensitive)
        f1s.append(b.f1)
        accs.append(b.accuracy)
        eods.append(np.mean([_abs_or_penalty(t[2]) for t in b.groups.values()]))
        aods.append(np.mean([_abs_or_penalty(t[1]) for t in b.groups.values()]))
    f1, acc, eod, aod = (float(np.mean(v)) for v in (f1s, accs, eods, aods))
    score = w.w_perf * (f1 + acc) - w.w_fair * (eod + aod)
    return Evaluation(score, f1, acc, eod, aod)


def objective(alpha: Sequence[float], ctx: ObjectiveContext, w: ObjectiveWeights) -> float:
    return evaluate_plan(alpha, ctx, w).score


def search_alpha(ctx: ObjectiveContext, w: ObjectiveWeights, params: PsoParams) -> SearchResult:
    """Run the swarm on the objective, sharing work between alphas that mutate the same row counts."""
    cache: dict[tuple[int, ...], Evaluation] = {}

    def key(alpha: np.ndarray) -> tuple[int, ...]:
        return tuple(int(math.floor(a * fold.train.n + 0.5)) for fold in ctx.folds for a in alpha)

    def func(alpha: np.ndarray) -> float:
        k = key(alpha)
        if k not in cache:
            cache[k] = evaluate_plan(alpha, ctx, w)
        return cache[k].score

    res = pso_search(func, len(ctx.features), params)
    best = cache[key(np.array(res.best_alpha))]
    return SearchResult(
        best_alpha=res.best_alpha,
        best_score=res.best_score,
        trace=res.trace,
        breakdown=best.breakdown(),
        evaluated=res.evaluated,
        failures=res.failures,
    )


@dataclass(frozen=True, eq=False)
class FitnessResult:
    model: TrainedModel
    search: SearchResult
    outcome: MutationOutcome


def fitness_fit(
    train: EncodedDataset,
    spec: ClassifierSpec,
    weights: ObjectiveWeights = ObjectiveWeights(),
    pso: PsoParams = PsoParams(),
    strategy: Strategy | str = Strategy.FLIP_SENSITIVE,
    smoothing: float = 0.0,
    seed: int = 0,
    kfold: int | None = None,
) -> FitnessResult:
    """Search the mutation fractions on an internal split of ``train``, then
    mutate the whole of ``train`` with the best fractions and fit on it."""
    ctx = make_context(train, spec, strategy, smoothing, seed, kfold=kfold)
    res = search_alpha(ctx, weights, pso)
    plan = MutationPlan(dict(zip(ctx.features, res.best_alpha)), ctx.strategy, seed)
    out = mutate(train, plan, identify_bias(train, smoothing))
    return FitnessResult(model=fit(spec, out.mutated_train), search=res, outcome=out)
