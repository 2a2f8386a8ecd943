"""Confusion counts, the four metrics, stratified k-fold CV and result tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus import FAKE, NON_FAKE
from .features import FeatureMatrix, build_vocab, fit_normalizer
from .sampling import SamplingPlan, sample_indices


class EvaluationError(ValueError):
    pass


def _code(label) -> int:
    if label in (1, True, FAKE):
        return 1
    if label in (0, False, NON_FAKE):
        return 0
    raise EvaluationError(f"unknown label {label!r}")


@dataclass(frozen=True)
class ConfusionCounts:
    t_fake: int = 0
    t_non_fake: int = 0
    f_fake: int = 0
    f_non_fake: int = 0

    @property
    def total(self) -> int:
        return self.t_fake + self.t_non_fake + self.f_fake + self.f_non_fake

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.t_fake + other.t_fake,
            self.t_non_fake + other.t_non_fake,
            self.f_fake + other.f_fake,
            self.f_non_fake + other.f_non_fake,
        )

    def to_dict(self) -> dict:
        return {
            "t_fake": self.t_fake,
            "t_non_fake": self.t_non_fake,
            "f_fake": self.f_fake,
            "f_non_fake": self.f_non_fake,
        }


def confusion(y_true: Sequence, y_pred: Sequence) -> ConfusionCounts:
    """Tally with fake as the positive class.

    ``f_fake`` counts non-fake reviews predicted fake; ``f_non_fake`` counts
    fake reviews predicted non-fake.
    """
    if len(y_true) != len(y_pred):
        raise EvaluationError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    t = np.fromiter((_code(v) for v in y_true), dtype=np.int8, count=len(y_true))
    p = np.fromiter((_code(v) for v in y_pred), dtype=np.int8, count=len(y_pred))
    return ConfusionCounts(
        t_fake=int(np.sum((t == 1) & (p == 1))),
        t_non_fake=int(np.sum((t == 0) & (p == 0))),
        f_fake=int(np.sum((t == 0) & (p == 1))),
        f_non_fake=int(np.sum((t == 1) & (p == 0))),
    )


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    precision_undefined: bool = False
    recall_undefined: bool = False

    @property
    def degenerate(self) -> bool:
        return self.precision_undefined or self.recall_undefined

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "precision_undefined": self.precision_undefined,
            "recall_undefined": self.recall_undefined,
        }


def metrics(c: ConfusionCounts) -> MetricsReport:
    """Precision, recall, F1 and accuracy on a 0-100 scale.

    An undefined precision or recall is reported as 0 with its flag set.
    """
    if c.total <= 0:
        raise EvaluationError("metrics of an empty confusion table")
    p_den = c.t_fake + c.f_fake
    r_den = c.t_fake + c.f_non_fake
    precision = 100.0 * c.t_fake / p_den if p_den else 0.0
    recall = 100.0 * c.t_fake / r_den if r_den else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = 100.0 * (c.t_fake + c.t_non_fake) / c.total
    return MetricsReport(precision, recall, f1, accuracy, p_den == 0, r_den == 0)


def mean_metrics(reports: Sequence[MetricsReport]) -> MetricsReport:
    if not reports:
        raise EvaluationError("no fold reports to average")
    k = len(reports)
    return MetricsReport(
        precision=sum(r.precision for r in reports) / k,
        recall=sum(r.recall for r in reports) / k,
        f1=sum(r.f1 for r in reports) / k,
        accuracy=sum(r.accuracy for r in reports) / k,
        precision_undefined=any(r.precision_undefined for r in reports),
        recall_undefined=any(r.recall_undefined for r in reports),
    )


def kfold_split(labels: Sequence, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Stratified k-fold test index sets.

    Each class is shuffled and dealt round-robin, continuing the deal from
    where the previous class stopped, so fold sizes and per-class counts
    differ by at most one row.
    """
    y = np.fromiter((_code(v) for v in labels), dtype=np.int8, count=len(labels))
    n = len(y)
    if k < 2:
        raise EvaluationError("k must be at least 2")
    if n < k:
        raise EvaluationError(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for cls in (1, 0):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(len(members))]
        for i in members:
            folds[pos % k].append(int(i))
            pos += 1
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


class Trainer(Protocol):
    def train(self, X, y, columns=None): ...


@dataclass
class FoldResult:
    test_index: np.ndarray
    confusion: ConfusionCounts
    metrics: MetricsReport
    n_train: int


@dataclass
class CvReport:
    k: int
    seed: int
    folds: list[FoldResult]
    mean: MetricsReport
    pooled: MetricsReport = field(default=None)  # type: ignore[assignment]

    @property
    def fold_metrics(self) -> list[MetricsReport]:
        return [f.metrics for f in self.folds]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [
                {
                    "fold": i,
                    "n_train": f.n_train,
                    "test_index": f.test_index.tolist(),
                    "confusion": f.confusion.to_dict(),
                    "metrics": f.metrics.to_dict(),
                }
                for i, f in enumerate(self.folds)
            ],
            "mean": self.mean.to_dict(),
            "pooled": self.pooled.to_dict(),
        }


def prepare_fold(
    matrix: FeatureMatrix,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    sampling: SamplingPlan,
    normalize: bool = True,
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Train/test matrices for one fold: per-fold unigram vocabulary and
    normalizer fitted on training rows, sampling applied to training rows only."""
    train = matrix.take(train_idx)
    test = matrix.take(test_idx)
    if matrix.documents is not None:
        vocab = build_vocab(train.documents, matrix.vocab_size)
        train = train.with_vocab(vocab)
        test = test.with_vocab(vocab)
    if normalize:
        norm = fit_normalizer(train.dense)
        train = train.normalized(norm)
        test = test.normalized(norm)
    if sampling.strategy != "none":
        train = train.take(sample_indices(train.y, sampling))
    return train, test


def cross_validate(
    matrix: FeatureMatrix,
    model_spec: Trainer,
    sampling: SamplingPlan = SamplingPlan(),
    k: int = 10,
    seed: int = 0,
    normalize: bool = True,
) -> CvReport:
    """Stratified k-fold evaluation; every row is tested exactly once.

    Pass ``normalize=False`` when the matrix was already normalized globally.
    """
    folds = kfold_split(matrix.y, k, seed)
    results = []
    everything = np.arange(len(matrix))
    for test_idx in folds:
        train_idx = np.setdiff1d(everything, test_idx, assume_unique=True)
        train, test = prepare_fold(matrix, train_idx, test_idx, sampling, normalize)
        model = model_spec.train(train.values, train.y, train.columns)
        pred = model.predict(test.values)
        c = confusion(test.y, pred)
        results.append(FoldResult(test_idx, c, metrics(c), len(train)))
    pooled = ConfusionCounts()
    for r in results:
        pooled = pooled + r.confusion
    return CvReport(k, seed, results, mean_metrics([r.metrics for r in results]), metrics(pooled))


# ---------------------------------------------------------------------------
# tables

RESULT_COLUMNS = ("Classifier", "FeatureSet", "WeightingScheme", "Precision", "Recall", "F1", "Accuracy")
CLASSIFIER_NAMES = {"rf": "RF", "svm": "SVM", "tree": "DT"}


@dataclass(frozen=True)
class ResultRow:
    classifier: str
    feature_set: str
    scheme: str
    metrics: MetricsReport

    def cells(self, digits: int = 3) -> list[str]:
        m = self.metrics
        return [
            CLASSIFIER_NAMES.get(self.classifier, self.classifier),
            self.feature_set,
            self.scheme,
            *(f"{v:.{digits}f}" for v in (m.precision, m.recall, m.f1, m.accuracy)),
        ]


def write_table_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    buf = io.StringIO()
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    buf.write(line.rstrip() + "\n")
    buf.write("  ".join("-" * w for w in widths) + "\n")
    for row in rows:
        cells = [c.rjust(w) if _numeric(c) else c.ljust(w) for c, w in zip(row, widths)]
        buf.write("  ".join(cells).rstrip() + "\n")
    return buf.getvalue()


def _numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
