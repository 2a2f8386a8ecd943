import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fakereview.classifiers import ForestParams, ModelSpec, SvmParams
from fakereview.corpus import FAKE, NON_FAKE
from fakereview.evaluation import (
    ConfusionCounts,
    EvaluationError,
    ResultRow,
    confusion,
    cross_validate,
    format_table,
    kfold_split,
    mean_metrics,
    metrics,
    prepare_fold,
)
from fakereview.features import FeatureMatrix
from fakereview.sampling import SamplingPlan

import oracles


def matrix(n=60, seed=0, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] > 0).astype(int)
    return FeatureMatrix([f"f{i}" for i in range(d)], X, y, [f"r{i}" for i in range(n)], d)


class Constant:
    """Trainer whose model always predicts one label."""

    def __init__(self, label):
        self.label = label

    def train(self, X, y, columns=None):
        return self

    def predict(self, X):
        return np.full(len(X), self.label, dtype=np.int8)


class TestConfusion:
    def test_hand_tally(self):
        c = confusion([FAKE, FAKE, NON_FAKE], [FAKE, NON_FAKE, NON_FAKE])
        assert c == ConfusionCounts(t_fake=1, t_non_fake=1, f_fake=0, f_non_fake=1)

    def test_perfect_and_inverted(self):
        y = [1, 0, 1, 0]
        c = confusion(y, y)
        assert c.f_fake == c.f_non_fake == 0
        c = confusion(y, [1 - v for v in y])
        assert c.t_fake == c.t_non_fake == 0

    def test_length_mismatch(self):
        with pytest.raises(EvaluationError):
            confusion([1], [1, 0])


class TestMetrics:
    def test_hand_values(self):
        m = metrics(ConfusionCounts(t_fake=8, f_fake=2, t_non_fake=7, f_non_fake=3))
        assert m.precision == pytest.approx(80.0)
        assert m.recall == pytest.approx(800 / 11)
        assert m.accuracy == pytest.approx(75.0)
        assert m.f1 == pytest.approx(76.19047619047619)

    def test_perfect(self):
        m = metrics(ConfusionCounts(5, 5, 0, 0))
        assert (m.precision, m.recall, m.f1, m.accuracy) == (100.0, 100.0, 100.0, 100.0)

    def test_degenerate(self):
        m = metrics(ConfusionCounts(t_non_fake=4))
        assert m.precision == m.recall == 0.0
        assert m.precision_undefined and m.recall_undefined
        assert m.accuracy == 100.0

    def test_empty(self):
        with pytest.raises(EvaluationError):
            metrics(ConfusionCounts())

    @settings(max_examples=100)
    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_oracle(self, tf, tn, ff, fn):
        if tf + tn + ff + fn == 0:
            return
        m = metrics(ConfusionCounts(tf, tn, ff, fn))
        want = oracles.metric_values(tf, tn, ff, fn)
        for got, exp in zip((m.precision, m.recall, m.f1, m.accuracy), want):
            assert abs(got - exp) <= 1e-9
            assert 0.0 <= got <= 100.0


class TestKFold:
    def test_twenty_balanced(self):
        y = [1, 0] * 10
        folds = kfold_split(y, 10, seed=0)
        assert all(len(f) == 2 and sum(y[i] for i in f) == 1 for f in folds)

    def test_leave_one_out(self):
        folds = kfold_split([1, 0, 1, 0, 1], k=5)
        assert sorted(int(f[0]) for f in folds) == list(range(5))
        assert all(len(f) == 1 for f in folds)

    def test_deterministic(self):
        y = np.random.default_rng(0).integers(0, 2, 50)
        assert all(np.array_equal(a, b) for a, b in zip(kfold_split(y, 5, 3), kfold_split(y, 5, 3)))

    def test_even_split_of_2060(self):
        folds = kfold_split([1] * 1030 + [0] * 1030, 10)
        assert [len(f) for f in folds] == [206] * 10

    def test_too_few_rows(self):
        with pytest.raises(EvaluationError):
            kfold_split([1, 0], 3)
        with pytest.raises(EvaluationError):
            kfold_split([1, 0], 1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=2, max_size=120), st.integers(2, 12), st.integers(0, 999))
    def test_partition_and_stratification(self, labels, k, seed):
        if len(labels) < k:
            return
        folds = kfold_split(labels, k, seed)
        flat = np.concatenate(folds)
        assert sorted(flat.tolist()) == list(range(len(labels)))
        y = np.array(labels)
        sizes = [len(f) for f in folds]
        fakes = [int(y[f].sum()) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert max(fakes) - min(fakes) <= 1


class TestCrossValidate:
    def test_each_row_tested_once(self):
        m = matrix()
        rep = cross_validate(m, ModelSpec("tree"), k=5)
        assert sum(f.confusion.total for f in rep.folds) == len(m)
        assert rep.pooled.accuracy == pytest.approx(
            100 * sum(f.confusion.t_fake + f.confusion.t_non_fake for f in rep.folds) / len(m))

    def test_mean_is_mean_of_folds(self):
        rep = cross_validate(matrix(80, 2), ModelSpec("rf", forest=ForestParams(n_trees=10)), k=10, seed=4)
        for name in ("precision", "recall", "f1", "accuracy"):
            want = sum(getattr(f.metrics, name) for f in rep.folds) / 10
            assert abs(getattr(rep.mean, name) - want) <= 1e-12

    def test_constant_predictor(self):
        m = matrix(40)
        m.y[:] = np.arange(40) % 2
        rep = cross_validate(m, Constant(1), k=10)
        assert all(f.metrics.accuracy == 50.0 for f in rep.folds)

    def test_deterministic(self):
        spec = ModelSpec("svm", svm=SvmParams(epochs=20))
        a = cross_validate(matrix(), spec, k=4, seed=1).to_dict()
        b = cross_validate(matrix(), spec, k=4, seed=1).to_dict()
        assert a == b

    def test_mean_metrics_flags(self):
        good = metrics(ConfusionCounts(1, 1, 0, 0))
        bad = metrics(ConfusionCounts(t_non_fake=2))
        assert mean_metrics([good, bad]).precision_undefined


class TestPrepareFold:
    def test_normalizer_from_train_only(self):
        m = matrix(10)
        m.values[9, 0] = 1e6
        train, test = prepare_fold(m, np.arange(9), np.array([9]), SamplingPlan())
        assert train.dense.max() <= 1.0
        assert test.values[0, 0] == 1.0  # clamped

    def test_sampling_train_only(self):
        m = matrix(40)
        m.y[:] = 0
        m.y[:5] = 1
        train, test = prepare_fold(m, np.arange(30), np.arange(30, 40), SamplingPlan("under"))
        assert int(train.y.sum()) * 2 == len(train)
        assert len(test) == 10

    def test_vocab_from_train(self):
        docs = [frozenset({"a"}), frozenset({"a"}), frozenset({"b"}), frozenset({"c"})]
        m = FeatureMatrix(["x"], np.zeros((4, 1)), [1, 0, 1, 0], list("wxyz"), 1, documents=docs, vocab_size=5)
        train, test = prepare_fold(m, np.array([0, 1, 2]), np.array([3]), SamplingPlan())
        assert train.columns == ["x", "unigram:a", "unigram:b"]
        assert test.values[0, 1:].tolist() == [0.0, 0.0]


class TestTables:
    def test_row_cells(self):
        row = ResultRow("rf", "FS2", "LTC", metrics(ConfusionCounts(8, 7, 2, 3)))
        assert row.cells() == ["RF", "FS2", "LTC", "80.000", "72.727", "76.190", "75.000"]

    def test_format(self):
        text = format_table(["A", "Num"], [["x", "1.5"], ["yy", "10.25"]])
        lines = text.splitlines()
        assert lines[0].startswith("A ")
        assert lines[2].endswith("  1.5")
