"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 runtime failure. Reports are written only when a command succeeds.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .causal import CausalError, identify_bias
from .data import (
    PRESETS,
    DataError,
    Dataset,
    encode,
    format_schema,
    load_dataset,
    load_schema,
    parse_synth_spec,
    split,
    synth_biased,
    write_csv,
)
from .decorrelate import Strategy
from .evaluate import (
    ExperimentConfig,
    ExperimentError,
    baseline_from_predictions,
    classify_bundle,
    reweigh,
    roc_postprocess,
    run_experiment,
)
from .evaluate.experiment import METHODS, normalize_methods
from .metrics import evaluate_predictions
from .models import KINDS, ClassifierSpec, ModelError, fit, predict, predict_scores
from .optimize import ObjectiveWeights, PsoParams, fitness_fit
from .report import write_report

OUTPUT_DIR_ENV = "FITNESS_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV path, or 'synthetic' together with --synth")
    p.add_argument("--schema", help=f"schema preset ({', '.join(PRESETS)}) or schema file")
    p.add_argument("--synth", help="synthetic spec, e.g. 'n=2000,p_priv=0.5,pf1=0.8,pf0=0.2'")
    p.add_argument("--protected", type=_csv_list, help="comma-separated protected features (default: all sensitive)")
    p.add_argument("--strata", type=_csv_list, help="comma-separated adjustment columns")
    p.add_argument("--smoothing", type=float, default=0.0, help="Laplace smoothing for causal estimates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"report path (default: <${OUTPUT_DIR_ENV}>/<command>.json when set)")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="lr", choices=[*KINDS, "svm"])
    p.add_argument("--weights", default="1:1", help="performance:fairness weight ratio")
    p.add_argument("--strategy", default="flip_sensitive", help="flip_sensitive, flip_label or flip_both")
    p.add_argument("--population", type=int, default=10)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--kfold", type=int, default=None, help="score candidates by k-fold instead of a hold-out")
    p.add_argument(
        "--exclude-sensitive", action="store_true",
        help="leave protected columns out of the model's inputs",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fitness", description="Causal de-correlation bias mitigation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("identify", help="estimate causal bias per protected feature")
    _add_data_args(p)

    for name, methods, help_text in (
        ("run", "default,fitness", "repeated default-vs-mitigated experiment"),
        ("compare", ",".join(METHODS), "repeated experiment against the comparison methods"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_data_args(p)
        _add_model_args(p)
        p.add_argument("--repeats", type=int, default=50)
        p.add_argument("--methods", type=_csv_list, default=_csv_list(methods))
        p.add_argument("--roc-theta", type=float, default=0.1)
        p.add_argument("--fairea-repeats", type=int, default=10)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--no-sidecar", action="store_true", help="skip the CSV table next to the report")

    p = sub.add_parser("fairea", help="classify mitigated models against the trade-off baseline on one split")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--methods", type=_csv_list, default=["fitness"])
    p.add_argument("--roc-theta", type=float, default=0.1)
    p.add_argument("--fairea-repeats", type=int, default=10)

    p = sub.add_parser("synth", help="write a biased synthetic dataset and its schema file")
    p.add_argument("--synth", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path; the schema goes to the same stem with .ini")
    return parser


def _load(args: argparse.Namespace) -> Dataset:
    if args.data == "synthetic":
        if not args.synth:
            raise UsageError("--data synthetic requires --synth")
        ds = synth_biased(parse_synth_spec(args.synth), args.seed)
        if args.strata:
            ds = replace(ds, schema=ds.schema.with_strata(args.strata))
        return ds
    if not args.schema:
        raise UsageError("--schema is required with a CSV file")
    schema = load_schema(args.schema)
    if args.strata:
        schema = schema.with_strata(args.strata)
    if not Path(args.data).is_file():
        raise DataError(f"data file {args.data!r} not found")
    return load_dataset(args.data, schema)


def _out_path(args: argparse.Namespace) -> Path | None:
    if args.out:
        return Path(args.out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    return Path(base) / f"{args.command}.json" if base else None


def _fmt(v: float | None, width: int = 8) -> str:
    return f"{'n/a':>{width}}" if v is None else f"{v:>{width}.4f}"


def cmd_identify(args: argparse.Namespace) -> int:
    ds = _load(args)
    eds = encode(ds, args.protected)
    report = identify_bias(eds, args.smoothing)
    print(f"{'feature':<20}{'ACE(y1,t1)':>12}{'ACE(y1,t0)':>12}{'ACD':>10}{'gap':>10}  priv  simpson")
    for fb in report.features.values():
        print(
            f"{fb.feature:<20}{fb.ace['y1_t1']:>12.4f}{fb.ace['y1_t0']:>12.4f}"
            f"{fb.acd:>10.4f}{fb.marginal_gap:>10.4f}  {fb.privileged_inferred:>4}  {'yes' if fb.simpson else 'no'}"
        )
    out = _out_path(args)
    if out:
        body = report.to_dict()
        body["seed"] = args.seed
        write_report(body, out)
    return EXIT_OK


def _config(args: argparse.Namespace, ds: Dataset) -> ExperimentConfig:
    return ExperimentConfig(
        dataset=ds,
        protected=tuple(args.protected) if args.protected else None,
        model=args.model,
        methods=tuple(args.methods),
        repeats=args.repeats,
        weights=ObjectiveWeights.parse(args.weights),
        pso=PsoParams(population=args.population, iterations=args.iterations),
        seed=args.seed,
        test_fraction=args.test_fraction,
        strategy=Strategy.parse(args.strategy),
        smoothing=args.smoothing,
        include_sensitive=not args.exclude_sensitive,
        roc_theta=args.roc_theta,
        fairea_repeats=args.fairea_repeats,
        kfold=args.kfold,
        jobs=args.jobs,
    )


def cmd_run(args: argparse.Namespace) -> int:
    ds = _load(args)
    config = _config(args, ds)
    out = _out_path(args)
    try:
        report = run_experiment(config)
    except ExperimentError as exc:
        print(f"fitness: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{'method':<10}{'acc':>8}{'f1':>8}{'|fair|':>8}  repeats")
    for method, agg in report.aggregates.items():
        print(
            f"{method:<10}{_fmt(agg['accuracy'])}{_fmt(agg['f1'])}{_fmt(agg['composite_fairness'])}"
            f"  {agg['n_repeats']}"
        )
    for method, block in report.significance.items():
        parts = []
        for name, res in block.items():
            parts.append(f"{name} p={'n/a' if res is None else format(res['p'], '.4g')}")
        print(f"{method}: " + ", ".join(parts))
    if report.failed:
        print(f"fitness: {report.failed} repeat(s) failed and were excluded", file=sys.stderr)
    if out:
        write_report(report, out, sidecar=not args.no_sidecar)
    return EXIT_OK


def cmd_fairea(args: argparse.Namespace) -> int:
    ds = _load(args)
    methods = [m for m in normalize_methods(args.methods) if m != "default"]
    weights = ObjectiveWeights.parse(args.weights)
    pso = PsoParams(population=args.population, iterations=args.iterations, seed=args.seed)
    strategy = Strategy.parse(args.strategy)
    spec = ClassifierSpec(args.model, seed=args.seed)
    eds = encode(ds, args.protected, include_sensitive=not args.exclude_sensitive)
    sp = split(eds, args.test_fraction, args.seed)
    train, test = sp.train, sp.test
    feature = train.protected[0]

    base = fit(spec, train)
    base_pred = predict(base, test.features)
    points = {"default": evaluate_predictions(test.label, base_pred, test.sensitive)}
    for m in methods:
        if m == "fitness":
            res = fitness_fit(train, spec, weights, pso, strategy, args.smoothing, args.seed, args.kfold)
            pred = predict(res.model, test.features)
        elif m == "rew":
            pred = predict(fit(spec, train, reweigh(train, feature)), test.features)
        else:
            pred = roc_postprocess(predict_scores(base, test.features), test.sensitive[feature], args.roc_theta)
        points[m] = evaluate_predictions(test.label, pred, test.sensitive)

    baselines = baseline_from_predictions(
        test.label, base_pred, test.sensitive, repeats=args.fairea_repeats, seed=args.seed, feature=feature
    )
    verdicts = {}
    for m in methods:
        v = classify_bundle(points[m], baselines, feature)
        verdicts[m] = {f"{a}:{b}": (x.to_dict() if x else None) for (a, b), x in v.items()}
        print(f"{m}:")
        for key, x in verdicts[m].items():
            print(f"  {key:<22}{x['region'] if x else 'undefined'}")
    out = _out_path(args)
    if out:
        body = {
            "kind": "fairea_report",
            "seed": args.seed,
            "feature": feature,
            "points": {m: b.to_dict() for m, b in points.items()},
            "baselines": [b.to_dict() for b in baselines.values()],
            "verdicts": verdicts,
        }
        write_report(body, out)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    ds = synth_biased(parse_synth_spec(args.synth), args.seed)
    out = Path(args.out)
    write_csv(ds, out)
    out.with_suffix(".ini").write_text(format_schema(ds.schema), encoding="utf-8")
    print(f"wrote {ds.n} rows to {out}")
    return EXIT_OK


COMMANDS = {"identify": cmd_identify, "run": cmd_run, "compare": cmd_run, "fairea": cmd_fairea, "synth": cmd_synth}


def execute(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelError, CausalError, ValueError) as exc:
        print(f"fitness: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"fitness: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
