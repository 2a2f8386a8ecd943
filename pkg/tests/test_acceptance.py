"""The ten acceptance criteria, each reported as one PASS/FAIL line."""

import csv
import datetime as dt
import json
import time
from collections import Counter

import numpy as np

from fakereview import runner
from fakereview.classifiers import (
    ForestParams,
    ModelSpec,
    SvmParams,
    TreeParams,
    forest_importance,
    gini_node,
    train_forest,
    train_svm,
    train_tree,
)
from fakereview.cli import main
from fakereview.evaluation import ConfusionCounts, cross_validate, kfold_split, metrics
from fakereview.features import (
    FeatureMatrix,
    ProductRatingIndex,
    ReviewerHistory,
    average_posting_rate,
    build_feature_matrix,
    content_length,
    feature_set,
    fit_normalizer,
    max_posting_rate,
    membership_length,
    positive_ratio,
    positive_to_negative_ratio,
    review_duration,
    reviewer_deviation,
)
from fakereview.sampling import SamplingPlan, oversample_indices, undersample_indices
from fakereview.synth import SynthConfig, generate_synthetic
from fakereview.textsim import (
    SCHEMES,
    WeightingScheme,
    capital_diversity,
    reviewer_content_similarity,
    reviewer_vectors,
    tokenize,
)

import oracles
from factories import review, reviewer

VOCAB = ["food", "good", "bad", "staff", "great", "slow", "pizza", "wine", "a", "b"]
ZERO_SIGNALS = dict(duplicate_text_rate=0.0, burst_rate=0.0, rating_deviation=0.0, positive_skew=0.0, vote_signal=0.0)


def random_docs(rng, max_reviews=8, max_len=10):
    n = int(rng.integers(1, max_reviews + 1))
    return [[str(w) for w in rng.choice(VOCAB, size=int(rng.integers(0, max_len + 1)))] for _ in range(n)]


def toks(doc):
    return tokenize(" ".join(doc))


def test_criterion_01_formula_oracles(criterion):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = Counter()
    seen = Counter()
    trials = 150

    def check(name, got, want):
        worst[name] = max(worst[name], abs(got - want))
        seen[name] += 1

    for _ in range(trials):
        docs = random_docs(rng)
        k = float(rng.uniform(0.3, 3.0))
        for scheme in SCHEMES:
            got = reviewer_vectors([toks(d) for d in docs], WeightingScheme(scheme, k))
            want = oracles.weight_dicts(docs, scheme, k)
            for g, w in zip(got, want):
                assert set(g.weights) == set(w)
                for t in w:
                    check(scheme, g.weights[t], w[t])
            check("RCS", reviewer_content_similarity([toks(d) for d in docs], WeightingScheme(scheme, k)),
                  oracles.rcs(docs, scheme, k))

        n = int(rng.integers(1, 10))
        ratings = [int(r) for r in rng.integers(1, 6, size=n)]
        dates = [oracles.random_date(rng, dt.date(2013, 1, 1), 20) for _ in range(n)]
        join = dt.date(2012, 12, 31) - dt.timedelta(days=int(rng.integers(0, 900)))
        ref = dt.date(2013, 2, 1) + dt.timedelta(days=int(rng.integers(0, 400)))
        a = reviewer("a1", join=join)
        h = ReviewerHistory.of(a, [review(f"r{i}", rating=r, date=d) for i, (r, d) in enumerate(zip(ratings, dates))])
        check("membership", membership_length(a, ref), oracles.membership(join, ref))
        check("APR", average_posting_rate(h), oracles.apr(dates))
        check("pos_ratio", positive_ratio(h), oracles.pos_ratio(ratings))
        check("pos_neg", positive_to_negative_ratio(h), oracles.pos_neg(ratings))
        check("MPR", max_posting_rate(h), oracles.mpr(dates))
        check("duration", review_duration(h), oracles.duration(dates))
        check("deviation", reviewer_deviation(review("x", rating=ratings[0]), ProductRatingIndex({"b1": ratings})),
              oracles.deviation(ratings[0], ratings))
        words = [str(w) for w in rng.choice(["Good", "good", "BAD", "Yelp", "x2", "the"], size=int(rng.integers(0, 12)))]
        text = " ".join(words)
        check("content_length", content_length(text), len(words))
        check("capital_diversity", capital_diversity(tokenize(text)), oracles.capital_diversity(text))

        y = rng.integers(0, 2, size=int(rng.integers(1, 40)))
        check("gini", gini_node(y), oracles.gini(y))
        counts = [int(c) for c in rng.integers(0, 40, size=4)]
        if sum(counts) == 0:
            counts[1] = 1
        m = metrics(ConfusionCounts(*counts))
        for name, got, want in zip(("precision", "recall", "f1", "accuracy"),
                                   (m.precision, m.recall, m.f1, m.accuracy), oracles.metric_values(*counts)):
            check(name, got, want)

    elapsed = time.perf_counter() - t0
    max_err = max(worst.values())
    # 3 weightings, RCS, 8 behavioral, capital diversity, Gini, 4 metrics
    ok = max_err <= 1e-9 and elapsed < 10.0 and len(seen) == 18 and min(seen.values()) >= 100
    criterion(1, "formula oracles", ok,
              f"{len(seen)} operations, >= {min(seen.values())} instances each, max |err| {max_err:.1e}, "
              f"{elapsed:.1f}s")
    assert ok


def test_criterion_02_rcs_brute_force(criterion):
    rng = np.random.default_rng(202)
    worst = 0.0
    count = 0
    for _ in range(200):
        docs = random_docs(rng, max_reviews=20, max_len=12)
        for scheme in SCHEMES:
            got = reviewer_content_similarity([toks(d) for d in docs], WeightingScheme(scheme))
            worst = max(worst, abs(got - oracles.rcs(docs, scheme)))
            count += 1
    ok = worst <= 1e-12
    criterion(2, "RCS equals exhaustive pairwise enumeration", ok, f"{count} reviewers, max |err| {worst:.1e}")
    assert ok


def test_criterion_03_importance_sums_to_100(criterion):
    sums = []
    rng = np.random.default_rng(303)
    for seed in range(20):
        X = rng.normal(size=(80, int(rng.integers(1, 12))))
        y = rng.integers(0, 2, size=80)
        model = train_forest(X, y, ForestParams(n_trees=int(rng.integers(1, 30)), seed=seed))
        sums.append(sum(s for _, s in forest_importance(model)))
    corpus = generate_synthetic(SynthConfig(n_reviews=400, n_reviewers=380, seed=3))
    fm = build_feature_matrix(corpus, feature_set("FS2"))
    fm = fm.normalized(fit_normalizer(fm.dense))
    sums.append(sum(s for _, s in forest_importance(train_forest(fm.values, fm.y, ForestParams(), fm.columns))))
    dev = max(abs(s - 100.0) for s in sums)
    ok = dev <= 1e-6
    criterion(3, "importance scores sum to 100", ok, f"{len(sums)} forests, max |sum-100| {dev:.1e}")
    assert ok


def _cv_accuracy(corpus, fs, seed):
    fm = build_feature_matrix(corpus, feature_set(fs))
    return cross_validate(fm, ModelSpec("rf", forest=ForestParams(seed=seed)), k=10, seed=seed).mean.accuracy


def test_criterion_04_fs2_over_fs1(criterion):
    t0 = time.perf_counter()
    wins = 0
    pairs = []
    for seed in range(10):
        corpus = generate_synthetic(SynthConfig(seed=seed))
        a1, a2 = _cv_accuracy(corpus, "FS1", seed), _cv_accuracy(corpus, "FS2", seed)
        pairs.append(f"{a1:.1f}/{a2:.1f}")
        wins += a2 >= a1
    elapsed = time.perf_counter() - t0
    ok = wins >= 8 and elapsed < 120.0
    criterion(4, "FS2 accuracy >= FS1 accuracy", ok, f"{wins}/10 seeds, {elapsed:.0f}s, FS1/FS2: {' '.join(pairs)}")
    assert ok


def _ranking(signal, seed):
    corpus = generate_synthetic(SynthConfig(seed=seed, **{**ZERO_SIGNALS, signal: 1.0}))
    fm = build_feature_matrix(corpus, feature_set("FS2"))
    fm = fm.normalized(fit_normalizer(fm.dense))
    model = train_forest(fm.values, fm.y, ForestParams(seed=seed), fm.columns)
    return [name for name, _ in forest_importance(model)]


def test_criterion_05_importance_sensitivity(criterion):
    dev_ranks = [_ranking("rating_deviation", s).index("reviewer_deviation") + 1 for s in range(3)]
    vote_ranks = [_ranking("vote_signal", s).index("reviewer_deviation") + 1 for s in range(3)]
    ok = all(r <= 3 for r in dev_ranks) and all(r > 3 for r in vote_ranks)
    criterion(5, "reviewer deviation rank follows the label signal", ok,
              f"deviation-driven ranks {dev_ranks}, vote-driven ranks {vote_ranks}")
    assert ok


def test_criterion_06_classifier_sanity(criterion, tmp_path):
    rng = np.random.default_rng(606)
    X = rng.uniform(-1, 1, size=(100, 2))
    y = (X[:, 0] - X[:, 1] > 0.05).astype(int)
    tree_ok = np.array_equal(train_tree(X, y, TreeParams(min_leaf=1)).predict(X), y)
    svm_ok = np.array_equal(train_svm(X, y, SvmParams(C=1000.0, epochs=300)).predict(X), y)

    Xn = rng.normal(size=(500, 8))
    yn = (Xn[:, 0] + Xn[:, 1] * Xn[:, 2] - 0.5 * Xn[:, 3] + 0.7 * rng.normal(size=500) > 0).astype(int)
    noisy = FeatureMatrix([f"x{i}" for i in range(8)], Xn, yn, [f"r{i}" for i in range(500)], 8)
    acc_tree = cross_validate(noisy, ModelSpec("tree"), k=10, seed=1).mean.accuracy
    acc_rf = cross_validate(noisy, ModelSpec("rf"), k=10, seed=1).mean.accuracy

    cfg = runner.RunConfig(synth={"n_reviews": 600, "n_reviewers": 570, "seed": 6}, classifiers=["rf", "svm"],
                           out=str(tmp_path / "cmp"))
    cells, out = runner.compare(cfg)
    folds = [[f.test_index.tolist() for f in c.report.folds] for c in cells]
    with open(out / "comparison.csv", newline="") as fh:
        table = list(csv.DictReader(fh))
    table_ok = len(table) == 2 and {r["Classifier"] for r in table} == {"RF", "SVM"} and folds[0] == folds[1]

    ok = tree_ok and svm_ok and acc_rf >= acc_tree and table_ok
    criterion(6, "classifier sanity", ok,
              f"tree fit {tree_ok}, svm fit {svm_ok}, noisy CV rf {acc_rf:.1f} vs tree {acc_tree:.1f}, "
              f"RF-vs-SVM table shared folds {table_ok}")
    assert ok


def test_criterion_07_sampling_invariants(criterion):
    rng = np.random.default_rng(707)
    ok = True
    for trial in range(200):
        n = int(rng.integers(2, 150))
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            continue
        under = undersample_indices(y, trial)
        over = oversample_indices(y, trial)
        cu, co = Counter(y[under].tolist()), Counter(y[over].tolist())
        ok &= cu[0] == cu[1] and co[0] == co[1]
        ok &= len(set(under.tolist())) == len(under) and set(under.tolist()) <= set(range(n))
        ok &= Counter(over.tolist()) >= Counter(range(n))
    y = np.array([0] * 97 + [1] * 3)
    example = Counter(y[undersample_indices(y, SamplingPlan("under").seed)].tolist())
    ok &= example == {0: 3, 1: 3}
    criterion(7, "sampling invariants", bool(ok), f"97/3 undersampled to {example[0]}/{example[1]}")
    assert ok


def test_criterion_08_cv_bookkeeping(criterion):
    rng = np.random.default_rng(808)
    ok = True
    for trial in range(50):
        n = int(rng.integers(20, 200))
        y = rng.integers(0, 2, size=n)
        k = int(rng.integers(2, 11))
        folds = kfold_split(y, k, trial)
        ok &= sorted(np.concatenate(folds).tolist()) == list(range(n))
        fakes = [int(y[f].sum()) for f in folds]
        genuine = [len(f) - int(y[f].sum()) for f in folds]
        ok &= max(fakes) - min(fakes) <= 1 and max(genuine) - min(genuine) <= 1
    X = rng.normal(size=(120, 4))
    yy = (X[:, 0] + rng.normal(size=120) > 0).astype(int)
    fm = FeatureMatrix([f"x{i}" for i in range(4)], X, yy, [f"r{i}" for i in range(120)], 4)
    rep = cross_validate(fm, ModelSpec("rf", forest=ForestParams(n_trees=20)), k=10, seed=2)
    tested = Counter(i for f in rep.folds for i in f.test_index.tolist())
    ok &= set(tested.values()) == {1} and len(tested) == 120
    gap = max(abs(getattr(rep.mean, m) - sum(getattr(f.metrics, m) for f in rep.folds) / 10)
              for m in ("precision", "recall", "f1", "accuracy"))
    ok &= gap <= 1e-12
    criterion(8, "CV bookkeeping", bool(ok), f"mean-vs-fold gap {gap:.1e}")
    assert ok


def test_criterion_09_determinism(criterion, tmp_path):
    first = tmp_path / "first"
    args = ["evaluate", "--synth", "default", "--feature-sets", "FS2", "--classifiers", "rf,svm", "--out", str(first)]
    assert main(args) == 0
    second = tmp_path / "second"
    assert main(["evaluate", "--config", str(first / "run-manifest.json"), "--out", str(second)]) == 0
    same = all((first / n).read_bytes() == (second / n).read_bytes() for n in ("results.csv", "importance.csv"))
    criterion(9, "evaluate rerun from manifest is byte-identical", same, "results.csv, importance.csv")
    assert same


def test_criterion_10_scheme_grid(criterion, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "grid"
    rc = main(["evaluate", "--synth", "default", "--feature-sets", "FS2", "--schemes", "NNC,LTC,BM25",
               "--classifiers", "rf,svm", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    with open(out / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    cells = Counter((r["Classifier"], r["WeightingScheme"]) for r in rows)
    in_range = all(0.0 <= float(r[c]) <= 100.0 for r in rows for c in ("Precision", "Recall", "F1", "Accuracy"))
    expected = {(c, s): 1 for c in ("RF", "SVM") for s in SCHEMES}
    ok = rc == 0 and dict(cells) == expected and in_range and elapsed < 180.0
    manifest = json.loads((out / "run-manifest.json").read_text())
    criterion(10, "scheme comparison grid", ok,
              f"{len(rows)} rows over {manifest['corpus']['reviews']} reviews, metrics in range {in_range}, "
              f"{elapsed:.0f}s")
    assert ok
