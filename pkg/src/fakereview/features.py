"""Behavioral and contextual features, named feature sets and feature matrices.

Reviewer-level features (posting rates, ratios, RCS, vote counts, ...) are
computed once per reviewer and copied onto each of that reviewer's review
rows.  Review-level features are reviewer deviation, content length,
capital diversity and the unigram block.
"""

from __future__ import annotations

import csv
import datetime as dt
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DEFAULT_POLICY, FAKE, NON_FAKE, LabelPolicy, Review, ReviewCorpus, Reviewer, map_label
from .textsim import (
    Token,
    WeightingScheme,
    capital_diversity,
    preprocess,
    reviewer_content_similarity,
    tokenize,
)

DISPLAY_NAMES = {
    "useful_count": "Useful Count",
    "cool_count": "Cool Count",
    "funny_count": "Funny Count",
    "friend_count": "Friend Count",
    "review_count": "Review Count",
    "average_posting_rate": "Average Posting Rate",
    "positive_ratio": "Positive Ratio",
    "reviewer_content_similarity": "Reviewer Content Similarity",
    "membership_length": "Membership Length",
    "review_duration": "Review Duration",
    "positive_to_negative_ratio": "Positive to Negative Ratio",
    "reviewer_deviation": "Reviewer Deviation",
    "tips_count": "Tips Count",
    "capital_diversity": "Capital Diversity",
    "content_length": "Content Length",
    "max_posting_rate": "Maximum Number of Reviews",
}
FEATURE_IDS = tuple(DISPLAY_NAMES)

_COMMON_FEATURES = (
    "useful_count",
    "cool_count",
    "funny_count",
    "friend_count",
    "review_count",
    "average_posting_rate",
)

FEATURE_SETS: dict[str, tuple[str, ...]] = {
    "FS1": _COMMON_FEATURES + (
        "positive_ratio",
        "reviewer_content_similarity",
        "membership_length",
        "review_duration",
        "positive_to_negative_ratio",
    ),
    "FS3": (
        "content_length",
        "positive_ratio",
        "reviewer_content_similarity",
        "reviewer_deviation",
        "max_posting_rate",
    ),
    "FS4": _COMMON_FEATURES + (
        "tips_count",
        "reviewer_content_similarity",
        "membership_length",
        "review_duration",
        "capital_diversity",
    ),
}
FEATURE_SETS["FS2"] = FEATURE_SETS["FS1"] + ("reviewer_deviation",)
FEATURE_SETS["FS5"] = FEATURE_SETS["FS4"] + ("reviewer_deviation",)

SET_KIND = {"FS1": "restaurant", "FS2": "restaurant", "FS3": "restaurant", "FS4": "hotel", "FS5": "hotel"}
DEFAULT_VOCAB_SIZE = 2000


class FeatureError(Exception):
    pass


class AdmissibilityError(FeatureError):
    """The feature set does not apply to the corpus kind."""


# ---------------------------------------------------------------------------
# reviewer history and rating index


@dataclass(frozen=True)
class ReviewerHistory:
    reviewer: Reviewer
    reviews: tuple[Review, ...]

    @classmethod
    def of(cls, reviewer: Reviewer, reviews: Iterable[Review]) -> "ReviewerHistory":
        ordered = tuple(sorted(reviews, key=lambda r: (r.date, r.review_id)))
        if any(r.reviewer_id != reviewer.reviewer_id for r in ordered):
            raise FeatureError(f"history of {reviewer.reviewer_id!r} holds a foreign review")
        return cls(reviewer, ordered)


def build_histories(corpus: ReviewCorpus) -> dict[str, ReviewerHistory]:
    return {
        rid: ReviewerHistory.of(corpus.reviewers[rid], corpus.reviews_of(rid))
        for rid in corpus.reviewers
    }


class ProductRatingIndex:
    """All ratings per business, with count and mean."""

    def __init__(self, ratings: dict[str, list[int]]):
        self.ratings = {k: tuple(v) for k, v in ratings.items() if v}
        self.count = {k: len(v) for k, v in self.ratings.items()}
        self.mean = {k: sum(v) / len(v) for k, v in self.ratings.items()}

    @classmethod
    def from_reviews(cls, reviews: Iterable[Review]) -> "ProductRatingIndex":
        ratings: dict[str, list[int]] = {}
        for r in reviews:
            ratings.setdefault(r.business_id, []).append(r.rating)
        return cls(ratings)

    def __contains__(self, business_id: str) -> bool:
        return business_id in self.mean


# ---------------------------------------------------------------------------
# feature operations


def _nonempty(history: ReviewerHistory) -> tuple[Review, ...]:
    if not history.reviews:
        raise FeatureError(f"empty history for reviewer {history.reviewer.reviewer_id!r}")
    return history.reviews


def membership_length(reviewer: Reviewer, ref_date: dt.date) -> int:
    """Days from account creation to the reference date."""
    if reviewer.join_date > ref_date:
        raise FeatureError(
            f"reviewer {reviewer.reviewer_id!r} joined {reviewer.join_date}, after reference date {ref_date}"
        )
    return (ref_date - reviewer.join_date).days


def average_posting_rate(history: ReviewerHistory) -> float:
    reviews = _nonempty(history)
    return len(reviews) / len({r.date for r in reviews})


def positive_ratio(history: ReviewerHistory) -> float:
    reviews = _nonempty(history)
    return sum(r.rating >= 4 for r in reviews) / len(reviews)


def positive_to_negative_ratio(history: ReviewerHistory) -> float:
    """Positive over negative count; a zero negative count is treated as 1."""
    reviews = _nonempty(history)
    pos = sum(r.rating >= 4 for r in reviews)
    neg = sum(r.rating <= 2 for r in reviews)
    return pos / neg if neg else float(pos)


def max_posting_rate(history: ReviewerHistory) -> int:
    reviews = _nonempty(history)
    return max(Counter(r.date for r in reviews).values())


def review_duration(history: ReviewerHistory) -> int:
    reviews = _nonempty(history)
    return (reviews[-1].date - reviews[0].date).days


def reviewer_deviation(review: Review, index: ProductRatingIndex) -> float:
    if review.business_id not in index:
        raise FeatureError(f"business {review.business_id!r} missing from rating index")
    return abs(review.rating - index.mean[review.business_id])


def content_length(review: Review | str) -> int:
    text = review.content if isinstance(review, Review) else review
    return len(tokenize(text))


def build_vocab(documents: Sequence[Iterable[str]], size: int = DEFAULT_VOCAB_SIZE) -> list[str]:
    """Top ``size`` terms by document frequency; ties broken alphabetically."""
    if size <= 0:
        return []
    df: Counter[str] = Counter()
    for doc in documents:
        df.update(set(doc))
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    return [t for t, _ in ranked[:size]]


def unigram_block(terms: Iterable[str] | Review, vocab: Sequence[str]) -> np.ndarray:
    """0/1 presence vector of ``vocab`` terms."""
    if isinstance(terms, Review):
        terms = [t.lower for t in preprocess(terms.content)]
    present = set(terms)
    return np.array([1.0 if v in present else 0.0 for v in vocab], dtype=np.float64)


def unigram_matrix(documents: Sequence[frozenset[str]], vocab: Sequence[str]) -> np.ndarray:
    pos = {t: i for i, t in enumerate(vocab)}
    out = np.zeros((len(documents), len(vocab)), dtype=np.float64)
    for row, doc in enumerate(documents):
        for t in doc:
            j = pos.get(t)
            if j is not None:
                out[row, j] = 1.0
    return out


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class Normalizer:
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.maxs == self.mins

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Normalizer":
        return cls(np.asarray(data["min"], dtype=np.float64), np.asarray(data["max"], dtype=np.float64))


def fit_normalizer(rows: np.ndarray) -> Normalizer:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise FeatureError("cannot fit a normalizer on an empty training set")
    return Normalizer(rows.min(axis=0), rows.max(axis=0))


def apply_normalizer(rows: np.ndarray, normalizer: Normalizer) -> np.ndarray:
    """Min-max scale into [0, 1]; out-of-range values clamp, constant columns map to 0."""
    rows = np.asarray(rows, dtype=np.float64)
    span = normalizer.maxs - normalizer.mins
    safe = np.where(span > 0, span, 1.0)
    out = (rows - normalizer.mins) / safe
    out = np.clip(out, 0.0, 1.0)
    out[:, span <= 0] = 0.0
    return out


# ---------------------------------------------------------------------------
# feature sets and matrices


@dataclass(frozen=True)
class FeatureSetSpec:
    name: str
    features: tuple[str, ...]
    scheme: WeightingScheme = field(default_factory=WeightingScheme)
    vocab_size: int = 0
    vote_source: str = "reviewer"
    lemmatize: bool = True
    stopwords: bool = False

    def __post_init__(self):
        unknown = [f for f in self.features if f not in DISPLAY_NAMES]
        if unknown:
            raise FeatureError(f"unknown feature id(s): {unknown}")
        if self.vote_source not in ("reviewer", "review"):
            raise FeatureError(f"vote_source must be 'reviewer' or 'review', got {self.vote_source!r}")
        if self.vocab_size < 0:
            raise FeatureError("vocab_size must be non-negative")

    @property
    def kind(self) -> str | None:
        return SET_KIND.get(self.name)

    def check_admissible(self, corpus_kind: str) -> None:
        required = self.kind
        if required is not None and corpus_kind != required:
            raise AdmissibilityError(f"{self.name} applies to {required} corpora, not {corpus_kind}")
        if required is None and corpus_kind == "mixed":
            raise AdmissibilityError("corpus mixes restaurants and hotels")


def feature_set(
    name: str,
    scheme: WeightingScheme | str = "LTC",
    vocab_size: int | None = None,
    **kwargs,
) -> FeatureSetSpec:
    """Named feature set (FS1..FS5) with the given RCS weighting scheme."""
    if isinstance(scheme, str):
        scheme = WeightingScheme(scheme)
    key = name.upper()
    if key not in FEATURE_SETS:
        raise FeatureError(f"unknown feature set {name!r}; expected one of {sorted(FEATURE_SETS)}")
    if vocab_size is None:
        vocab_size = DEFAULT_VOCAB_SIZE if key == "FS3" else 0
    elif key != "FS3" and vocab_size:
        raise FeatureError("only FS3 carries a unigram block")
    return FeatureSetSpec(key, FEATURE_SETS[key], scheme, vocab_size, **kwargs)


@dataclass
class FeatureMatrix:
    """Rows of named feature values, one per review.

    The first ``n_dense`` columns are real-valued features; any remaining
    columns are the 0/1 unigram block, which normalization leaves alone.
    ``documents`` keeps each row's term set so the vocabulary can be rebuilt
    from training rows only.
    """

    columns: list[str]
    values: np.ndarray
    y: np.ndarray
    review_ids: list[str]
    n_dense: int
    name: str = "custom"
    scheme: str = "LTC"
    normalizer: Normalizer | None = None
    documents: list[frozenset[str]] | None = None
    vocab_size: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.review_ids), len(self.columns))
        self.y = np.asarray(self.y, dtype=np.int8)
        if len(self.y) != len(self.review_ids):
            raise FeatureError("label count does not match row count")

    def __len__(self) -> int:
        return len(self.review_ids)

    @property
    def labels(self) -> list[str]:
        return [FAKE if v else NON_FAKE for v in self.y]

    @property
    def dense(self) -> np.ndarray:
        return self.values[:, : self.n_dense]

    @property
    def dense_columns(self) -> list[str]:
        return self.columns[: self.n_dense]

    def take(self, idx: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        docs = [self.documents[i] for i in idx] if self.documents is not None else None
        return replace(
            self,
            values=self.values[idx],
            y=self.y[idx],
            review_ids=[self.review_ids[i] for i in idx],
            documents=docs,
        )

    def with_vocab(self, vocab: Sequence[str]) -> "FeatureMatrix":
        """Rebuild the unigram block from ``documents`` over ``vocab``."""
        if self.documents is None:
            raise FeatureError("matrix carries no documents to rebuild unigrams from")
        block = unigram_matrix(self.documents, vocab)
        return replace(
            self,
            columns=self.dense_columns + [f"unigram:{t}" for t in vocab],
            values=np.hstack([self.dense, block]),
        )

    def normalized(self, normalizer: Normalizer) -> "FeatureMatrix":
        values = self.values.copy()
        values[:, : self.n_dense] = apply_normalizer(self.dense, normalizer)
        return replace(self, values=values, normalizer=normalizer)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["review_id"] + self.columns + ["label"])
            for rid, row, lab in zip(self.review_ids, self.values, self.labels):
                writer.writerow([rid] + [_fmt(v) for v in row] + [lab])


def _fmt(value: float) -> str:
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def read_feature_csv(path: str | Path, name: str = "custom", scheme: str = "") -> FeatureMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[0] != "review_id" or header[-1] != "label":
            raise FeatureError(f"{path}: header must be review_id, <features...>, label")
        columns = header[1:-1]
        ids, rows, y = [], [], []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(header):
                raise FeatureError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            ids.append(rec[0])
            try:
                rows.append([float(v) for v in rec[1:-1]])
            except ValueError as exc:
                raise FeatureError(f"{path}:{lineno}: {exc}") from None
            if rec[-1] not in (FAKE, NON_FAKE):
                raise FeatureError(f"{path}:{lineno}: bad label {rec[-1]!r}")
            y.append(1 if rec[-1] == FAKE else 0)
    n_dense = sum(1 for c in columns if not c.startswith("unigram:"))
    values = np.array(rows, dtype=np.float64).reshape(len(ids), len(columns))
    return FeatureMatrix(columns, values, np.array(y), ids, n_dense, name=name, scheme=scheme)


def default_ref_date(corpus: ReviewCorpus) -> dt.date:
    return corpus.max_review_date() + dt.timedelta(days=1)


def _reviewer_features(
    history: ReviewerHistory,
    token_lists: list[list[Token]],
    spec: FeatureSetSpec,
    ref_date: dt.date,
) -> dict[str, float]:
    wanted = set(spec.features)
    a = history.reviewer
    out: dict[str, float] = {}
    if "friend_count" in wanted:
        out["friend_count"] = a.friend_count
    if "review_count" in wanted:
        out["review_count"] = a.review_count
    if "tips_count" in wanted:
        out["tips_count"] = a.tip_count
    if spec.vote_source == "reviewer":
        out["useful_count"] = a.useful_count
        out["cool_count"] = a.cool_count
        out["funny_count"] = a.funny_count
    if "membership_length" in wanted:
        out["membership_length"] = membership_length(a, ref_date)
    if "average_posting_rate" in wanted:
        out["average_posting_rate"] = average_posting_rate(history)
    if "positive_ratio" in wanted:
        out["positive_ratio"] = positive_ratio(history)
    if "positive_to_negative_ratio" in wanted:
        out["positive_to_negative_ratio"] = positive_to_negative_ratio(history)
    if "max_posting_rate" in wanted:
        out["max_posting_rate"] = max_posting_rate(history)
    if "review_duration" in wanted:
        out["review_duration"] = review_duration(history)
    if "reviewer_content_similarity" in wanted:
        out["reviewer_content_similarity"] = reviewer_content_similarity(token_lists, spec.scheme)
    return out


def build_feature_matrix(
    corpus: ReviewCorpus,
    spec: FeatureSetSpec,
    label_policy: LabelPolicy = DEFAULT_POLICY,
    ref_date: dt.date | None = None,
    vocab: Sequence[str] | None = None,
) -> FeatureMatrix:
    """One un-normalized row per review, columns in feature-set order.

    For FS3 the unigram block is built over ``vocab`` when given, otherwise
    over the top ``spec.vocab_size`` terms of the whole corpus; evaluation
    rebuilds it per training fold.
    """
    spec.check_admissible(corpus.kind)
    if ref_date is None:
        ref_date = default_ref_date(corpus)
    index = ProductRatingIndex.from_reviews(corpus.reviews.values())

    tokens: dict[str, list[Token]] = {}
    terms: dict[str, list[Token]] = {}
    for rid, r in corpus.reviews.items():
        tokens[rid] = tokenize(r.content)
        terms[rid] = preprocess(r.content, lemmatize_terms=spec.lemmatize, stopwords=spec.stopwords)

    per_reviewer: dict[str, dict[str, float]] = {}
    for aid, ids in corpus.by_reviewer.items():
        if not ids:
            continue
        if aid not in corpus.reviewers:
            raise FeatureError(f"missing reviewer record {aid!r}")
        history = ReviewerHistory.of(corpus.reviewers[aid], (corpus.reviews[i] for i in ids))
        token_lists = [terms[r.review_id] for r in history.reviews]
        per_reviewer[aid] = _reviewer_features(history, token_lists, spec, ref_date)

    wanted = spec.features
    ids = list(corpus.reviews)
    values = np.zeros((len(ids), len(wanted)), dtype=np.float64)
    y = np.zeros(len(ids), dtype=np.int8)
    for row, rid in enumerate(ids):
        r = corpus.reviews[rid]
        feats = dict(per_reviewer[r.reviewer_id])
        if spec.vote_source == "review":
            feats["useful_count"] = r.useful_count
            feats["cool_count"] = r.cool_count
            feats["funny_count"] = r.funny_count
        if "reviewer_deviation" in wanted:
            feats["reviewer_deviation"] = reviewer_deviation(r, index)
        if "content_length" in wanted:
            feats["content_length"] = len(tokens[rid])
        if "capital_diversity" in wanted:
            feats["capital_diversity"] = capital_diversity(tokens[rid])
        values[row] = [feats[f] for f in wanted]
        y[row] = 1 if map_label(r.flag, label_policy) == FAKE else 0

    matrix = FeatureMatrix(
        columns=list(wanted),
        values=values,
        y=y,
        review_ids=ids,
        n_dense=len(wanted),
        name=spec.name,
        scheme=str(spec.scheme),
    )
    if spec.name == "FS3" or spec.vocab_size:
        docs = [frozenset(t.lower for t in terms[rid]) for rid in ids]
        matrix.documents = docs
        matrix.vocab_size = spec.vocab_size
        if vocab is None:
            vocab = build_vocab(docs, spec.vocab_size)
        matrix = matrix.with_vocab(vocab)
    return matrix
