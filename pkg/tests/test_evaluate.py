from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import from_counts
from fitness.data import DataError, SynthSpec, encode, synth_biased
from fitness.evaluate import (
    PAIRS,
    REGIONS,
    ExperimentConfig,
    ExperimentError,
    FaireaBaseline,
    baseline_from_predictions,
    classify_tradeoff,
    fairea_baseline,
    mann_whitney_u,
    metric_series,
    reweigh,
    reweigh_table,
    roc_postprocess,
    run_experiment,
)
from fitness.evaluate import experiment as experiment_mod
from fitness.evaluate.experiment import mean
from fitness.metrics import evaluate_predictions
from fitness.models import ClassifierSpec, fit, predict
from fitness.optimize import PsoParams
from oracles import mw_enumerate

WORKED = {(1, 1): 40, (1, 0): 10, (0, 1): 10, (0, 0): 40}
EXAMPLE = FaireaBaseline("spd", "accuracy", (0.0, 1.0), ((0.2, 0.8), (0.0, 0.7)))


# reweighing

def test_reweigh_worked_values():
    eds = from_counts(WORKED, seed=0)
    table = reweigh_table(eds.sensitive["a"], eds.label)
    assert table[(1, 1)] == Fraction(5, 8) and table[(1, 0)] == Fraction(5, 2)
    w = reweigh(eds)
    assert set(w[(eds.sensitive["a"] == 1) & (eds.label == 1)]) == {0.625}
    assert set(w[(eds.sensitive["a"] == 1) & (eds.label == 0)]) == {2.5}


def test_reweigh_independent_table_is_all_ones():
    eds = from_counts({(1, 1): 12, (1, 0): 8, (0, 1): 18, (0, 0): 12})
    assert np.all(reweigh(eds) == 1.0)


def test_reweigh_empty_cell_named():
    eds = from_counts({(1, 1): 5, (1, 0): 0, (0, 1): 2, (0, 0): 3})
    with pytest.raises(ValueError, match=r"A=1, Y=0"):
        reweigh(eds)


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.integers(1, 500)] * 4))
def test_reweigh_factorizes_exactly(c):
    counts = {(1, 1): c[0], (1, 0): c[1], (0, 1): c[2], (0, 0): c[3]}
    n = sum(c)
    table = reweigh_table(*_vectors(counts))
    for (a, y), w in table.items():
        n_a = sum(v for (aa, _), v in counts.items() if aa == a)
        n_y = sum(v for (_, yy), v in counts.items() if yy == y)
        assert counts[(a, y)] * w == Fraction(n_a * n_y, n)
        assert w > 0


def _vectors(counts):
    a, y = [], []
    for (av, yv), k in counts.items():
        a += [av] * k
        y += [yv] * k
    return np.array(a), np.array(y)


# reject option classification

def test_roc_rules():
    assert list(roc_postprocess([0.55], [1], 0.1)) == [0]
    assert list(roc_postprocess([0.45], [0], 0.1)) == [1]
    assert list(roc_postprocess([0.55, 0.45, 0.7, 0.2], [0, 1, 1, 0], 0.1)) == [1, 0, 1, 0]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roc_tiny_band_is_thresholding(seed):
    rng = np.random.default_rng(seed)
    s = rng.random(200)
    s = s[s != 0.5]
    g = rng.integers(0, 2, len(s))
    theta = max(1e-12, float(np.min(np.abs(s - 0.5))) / 2)
    assert np.array_equal(roc_postprocess(s, g, theta), (s >= 0.5).astype(int))


def test_roc_errors():
    for bad in (0.0, 0.6, -1):
        with pytest.raises(ValueError):
            roc_postprocess([0.5], [1], bad)
    with pytest.raises(ValueError):
        roc_postprocess([0.5, 0.4], [1], 0.1)


# trade-off baseline

def test_interpolation_example():
    assert EXAMPLE.interpolate(0.05) == pytest.approx(0.725, abs=1e-15)


def test_worked_verdicts():
    assert classify_tradeoff((0.05, 0.78), EXAMPLE).region == "good"
    assert classify_tradeoff((0.10, 0.82), EXAMPLE).region == "win-win"
    assert classify_tradeoff((0.25, 0.75), EXAMPLE).region == "lose-lose"
    assert classify_tradeoff((0.25, 0.85), EXAMPLE).region == "inverted"
    assert classify_tradeoff((0.05, 0.70), EXAMPLE).region == "poor"


def test_boundary_conventions():
    # equal to the origin: not improved
    assert classify_tradeoff((0.2, 0.8), EXAMPLE).region == "lose-lose"
    assert classify_tradeoff((0.2, 0.9), EXAMPLE).region == "inverted"
    # equal to the baseline: good
    assert classify_tradeoff((0.1, EXAMPLE.interpolate(0.1)), EXAMPLE).region == "good"


def test_clamping_outside_anchor_range():
    base = FaireaBaseline("spd", "accuracy", (0.0, 0.5, 1.0), ((0.3, 0.8), (0.1, 0.75), (0.05, 0.7)))
    assert base.interpolate(0.0) == 0.7
    assert base.interpolate(0.4) == 0.8


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=11),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_regions_partition(anchors, f, p):
    base = FaireaBaseline("spd", "accuracy", tuple(i / 10 for i in range(len(anchors))), tuple(anchors))
    v = classify_tradeoff((f, p), base)
    assert v.region in REGIONS
    f0, p0 = anchors[0]
    assert (v.region == "win-win") == (f < f0 and p > p0)
    assert (v.region == "inverted") == (f >= f0 and p > p0)
    assert (v.region == "lose-lose") == (f >= f0 and p <= p0)


def small_model(seed=0):
    eds = encode(synth_biased(SynthSpec(400, 0.5, 0.7, 0.3, 2), seed), include_sensitive=True)
    model = fit(ClassifierSpec("lr"), eds)
    return model, eds


def test_fairea_anchors():
    model, test = small_model()
    bases = fairea_baseline(model, test, seed=3)
    assert set(bases) == set(PAIRS) and len(PAIRS) == 12
    bundle = evaluate_predictions(test.label, predict(model, test.features), test.sensitive)
    for (fm, pm), b in bases.items():
        assert b.anchors[0] == (abs(bundle.value(fm)), bundle.value(pm))
        assert len(b.anchors) == 11
    majority = 1 if 2 * test.label.sum() >= test.n else 0
    end = bases[("spd", "accuracy")].anchors[-1]
    assert end == (0.0, float(np.mean(test.label == majority)))
    again = fairea_baseline(model, test, seed=3)
    assert all(again[k].anchors == bases[k].anchors for k in bases)


def test_fairea_errors():
    with pytest.raises(ValueError):
        baseline_from_predictions([1, 0], [1, 0], {"a": np.array([1, 0])}, degrees=(0.0, 0.5))
    with pytest.raises(ValueError):
        baseline_from_predictions([], [], {"a": np.array([])})
    with pytest.raises(ValueError):
        FaireaBaseline("spd", "accuracy", (0.0,), ((0.1, 0.5),))


# Mann-Whitney

def test_mw_worked():
    res = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert res.u == 0 and res.p == 0.1 and res.exact
    u, p = res
    assert (u, p) == (0, 0.1)


def test_mw_identical_samples():
    res = mann_whitney_u([3, 1, 2, 2], [2, 3, 1, 2])
    assert res.u == res.u_other == 8 and res.p == 1.0


def test_mw_empty():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 6), min_size=1, max_size=8),
    st.lists(st.integers(0, 6), min_size=1, max_size=8),
)
def test_mw_exact_equals_enumeration(a, b):
    res = mann_whitney_u(a, b)
    u, p = mw_enumerate(a, b)
    assert res.exact and res.u == float(u)
    assert abs(res.p - float(p)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60),
    st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60),
)
def test_mw_u_sum_and_p_range(a, b):
    res = mann_whitney_u(a, b)
    assert res.u + res.u_other == len(a) * len(b)
    assert 0 <= res.p <= 1


def test_mw_shift_invariance_integers():
    rng = np.random.default_rng(0)
    a, b = rng.integers(0, 20, 12).tolist(), rng.integers(0, 20, 40).tolist()
    base = mann_whitney_u(a, b)
    moved = mann_whitney_u([x + 7 for x in a], [x + 7 for x in b])
    assert (moved.u, moved.p) == (base.u, base.p)


def test_mw_normal_branch_matches_scipy():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.integers(0, 30, 25).tolist()
        b = (rng.integers(0, 30, 30) + 3).tolist()
        res = mann_whitney_u(a, b)
        ref = stats.mannwhitneyu(a, b, use_continuity=True, alternative="two-sided", method="asymptotic")
        assert not res.exact
        assert res.u == ref.statistic
        assert abs(res.p - ref.pvalue) <= 1e-12


# experiment harness

def synth_config(**kw):
    ds = synth_biased(SynthSpec(300, 0.5, 0.8, 0.2), 0)
    base = dict(repeats=3, pso=PsoParams(population=3, iterations=2), fairea_repeats=2)
    base.update(kw)
    return ExperimentConfig(ds, **base)


def test_single_default_repeat():
    rep = run_experiment(synth_config(repeats=1, methods=("default",)))
    assert len(rep.repeats) == 1
    assert list(rep.repeats[0]["metrics"]) == ["default"]
    assert rep.significance == {}


def test_report_determinism_and_means():
    cfg = synth_config(methods=("default", "FITNESS", "rew", "roc"))
    a, b = run_experiment(cfg).to_dict(), run_experiment(cfg).to_dict()
    assert a == b
    assert len(a["repeats"]) == 3
    for method, agg in a["aggregates"].items():
        vals = [r["metrics"][method]["accuracy"] for r in a["repeats"]]
        assert agg["accuracy"] == mean(vals)
        assert agg["accuracy"] == pytest.approx(float(np.mean(vals)), abs=1e-15)
    assert set(a["significance"]) == {"fitness", "rew", "roc"}
    for block in a["significance"].values():
        assert block["accuracy"]["significant"] == (block["accuracy"]["p"] < 0.05)
    assert a["fairea"]["fitness"]["pairs"] == 36


def test_failed_repeats_flagged_and_excluded(monkeypatch):
    real_split = experiment_mod.split
    seeds_to_fail = {experiment_mod.repeat_seed(0, 2)}

    def flaky(eds, frac, seed):
        if seed in seeds_to_fail:
            raise DataError("boom")
        return real_split(eds, frac, seed)

    monkeypatch.setattr(experiment_mod, "split", flaky)
    rep = run_experiment(synth_config(repeats=5, methods=("default",)))
    assert rep.failed == 1
    assert rep.repeats[2]["status"] == "failed" and "boom" in rep.repeats[2]["error"]
    assert rep.aggregates["default"]["n_repeats"] == 4
    assert len(metric_series(rep.repeats, "default", "accuracy")) == 4

    seeds_to_fail.add(experiment_mod.repeat_seed(0, 3))
    with pytest.raises(ExperimentError) as info:
        run_experiment(synth_config(repeats=5, methods=("default",)))
    assert info.value.report.failed == 2


def test_config_validation():
    with pytest.raises(ValueError):
        synth_config(methods=("default", "magic"))
    assert synth_config(methods=("fitness",)).methods == ("default", "fitness")
