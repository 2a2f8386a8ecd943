"""Tokenization, term weighting (NNC / LTC / BM25), cosine similarity and RCS.

All similarity work happens inside one reviewer's review collection: the
document frequencies ``df(t)`` and the collection size ``M`` come from that
reviewer's own reviews.  Every weighted vector is L2-normalized by its own
norm, so a non-empty vector has self-similarity 1.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

SCHEMES = ("NNC", "LTC", "BM25")
DEFAULT_BM25_K = 1.2

# seeded with irregular past forms; values must be fixed points of the suffix rules
LEMMA_EXCEPTIONS = {
    "bought": "buy",
    "brought": "bring",
    "went": "go",
    "gone": "go",
    "came": "come",
    "ate": "eat",
    "eaten": "eat",
    "took": "take",
    "taken": "take",
    "made": "make",
    "paid": "pay",
    "said": "say",
    "told": "tell",
    "found": "find",
    "left": "leave",
    "got": "get",
    "gotten": "get",
    "gave": "give",
    "given": "give",
    "thought": "think",
    "felt": "feel",
    "kept": "keep",
    "sat": "sit",
    "saw": "see",
    "seen": "see",
    "was": "be",
    "were": "be",
    "been": "be",
    "is": "be",
    "are": "be",
    "has": "have",
    "had": "have",
    "did": "do",
    "does": "do",
    "done": "do",
    "children": "child",
    "people": "person",
    "men": "man",
    "women": "woman",
}

ENGLISH_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because been
    before being below between both but by can did do does doing down during each
    few for from further had has have having he her here hers herself him himself
    his how i if in into is it its itself just me more most my myself no nor not
    now of off on once only or other our ours ourselves out over own same she
    should so some such than that the their theirs them themselves then there
    these they this those through to too under until up very was we were what when
    where which while who whom why will with you your yours yourself yourselves
    """.split()
)


@dataclass(frozen=True)
class Token:
    surface: str
    lower: str
    capital: bool


TokenSequence = list[Token]


def tokenize(text: str) -> TokenSequence:
    """Split on non-alphanumeric boundaries, remembering leading capitals."""
    return [Token(m, m.lower(), m[0].isupper()) for m in _TOKEN_RE.findall(text or "")]


_VOWELS = set("aeiouy")


def _has_vowel(stem: str) -> bool:
    return any(c in _VOWELS for c in stem)


def _undouble(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "aeioulsz":
        return stem[:-1]
    return stem


def _strip_once(word: str) -> str:
    if word in LEMMA_EXCEPTIONS:
        return LEMMA_EXCEPTIONS[word]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ing"):
        stem = word[:-3]
        if len(stem) >= 3 and _has_vowel(stem):
            return _undouble(stem)
        return word
    if word.endswith("ed"):
        stem = word[:-2]
        if len(stem) >= 3 and _has_vowel(stem):
            return _undouble(stem)
        return word
    if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) >= 4:
        return word[:-1]
    return word


def lemma(word: str) -> str:
    """Rule-based lemma: exception table, then -ies/-sses/-ing/-ed/-s stripping to a fixed point."""
    current = word
    for _ in range(8):
        nxt = _strip_once(current)
        if nxt == current:
            break
        current = nxt
    return current


def lemmatize(tokens: Sequence[Token]) -> TokenSequence:
    return [Token(t.surface, lemma(t.lower), t.capital) for t in tokens]


def remove_stopwords(tokens: Sequence[Token], stopwords: Iterable[str] = ENGLISH_STOPWORDS) -> TokenSequence:
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [t for t in tokens if t.lower not in stop]


def preprocess(text: str, lemmatize_terms: bool = True, stopwords: bool = False) -> TokenSequence:
    tokens = tokenize(text)
    if stopwords:
        tokens = remove_stopwords(tokens)
    if lemmatize_terms:
        tokens = lemmatize(tokens)
    return tokens


def capital_diversity(tokens: Sequence[Token]) -> float:
    if not tokens:
        return 0.0
    return sum(1 for t in tokens if t.capital) / len(tokens)


# ---------------------------------------------------------------------------
# weighting


@dataclass(frozen=True)
class WeightingScheme:
    variant: str = "LTC"
    k: float = DEFAULT_BM25_K

    def __post_init__(self):
        variant = self.variant.upper()
        if variant not in SCHEMES:
            raise ValueError(f"unknown weighting scheme {self.variant!r}; expected one of {SCHEMES}")
        object.__setattr__(self, "variant", variant)
        if not self.k > 0:
            raise ValueError(f"BM25 k must be positive, got {self.k!r}")

    def __str__(self) -> str:
        return self.variant


@dataclass(frozen=True)
class ReviewerTermStats:
    """Collection size ``M`` and per-term document frequency over one reviewer's reviews."""

    M: int
    df: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_reviews(cls, reviews: Sequence[Sequence[Token]]) -> "ReviewerTermStats":
        df: Counter[str] = Counter()
        for tokens in reviews:
            df.update({t.lower for t in tokens})
        return cls(len(reviews), dict(df))


@dataclass(frozen=True)
class WeightedTermVector:
    weights: dict[str, float]
    scheme: WeightingScheme

    def norm(self) -> float:
        return math.sqrt(math.fsum(w * w for w in self.weights.values()))

    def __len__(self) -> int:
        return len(self.weights)


def raw_weight(count: int, df: int, M: int, scheme: WeightingScheme) -> float:
    """Unnormalized weight of a term seen ``count`` times in a review."""
    if scheme.variant == "NNC":
        return float(count)
    if scheme.variant == "LTC":
        return (1.0 + math.log(count)) * math.log(M / df)
    k = scheme.k
    return count * ((k + 1.0) * count / (count + k)) * math.log((M + 1) / df)


def weight_review(tokens: Sequence[Token], stats: ReviewerTermStats, scheme: WeightingScheme) -> WeightedTermVector:
    counts = Counter(t.lower for t in tokens)
    raw: dict[str, float] = {}
    for term, c in counts.items():
        if term not in stats.df:
            raise KeyError(f"term {term!r} missing from reviewer term statistics")
        w = raw_weight(c, stats.df[term], stats.M, scheme)
        if w > 0.0:
            raw[term] = w
    norm = math.sqrt(math.fsum(w * w for w in raw.values()))
    if norm == 0.0:
        return WeightedTermVector({}, scheme)
    return WeightedTermVector({t: raw[t] / norm for t in sorted(raw)}, scheme)


def cosine_similarity(u: WeightedTermVector, v: WeightedTermVector) -> float:
    if u.scheme != v.scheme:
        raise ValueError(f"scheme mismatch: {u.scheme!r} vs {v.scheme!r}")
    if len(u.weights) > len(v.weights):
        u, v = v, u
    vw = v.weights
    s = math.fsum(w * vw[t] for t, w in u.weights.items() if t in vw)
    return min(max(s, 0.0), 1.0)


def reviewer_vectors(reviews: Sequence[Sequence[Token]], scheme: WeightingScheme) -> list[WeightedTermVector]:
    stats = ReviewerTermStats.from_reviews(reviews)
    return [weight_review(tokens, stats, scheme) for tokens in reviews]


def reviewer_content_similarity(reviews: Sequence[Sequence[Token]], scheme: WeightingScheme) -> float:
    """Mean over reviews of the best cosine match among the reviewer's *other* reviews.

    A reviewer with fewer than two reviews scores 0.
    """
    n = len(reviews)
    if n <= 1:
        return 0.0
    vectors = reviewer_vectors(reviews, scheme)
    best = [0.0] * n
    for i in range(n):
        for j in range(i + 1, n):
            s = cosine_similarity(vectors[i], vectors[j])
            if s > best[i]:
                best[i] = s
            if s > best[j]:
                best[j] = s
    return math.fsum(best) / n


def dump_vectors(vectors: Iterable[tuple[str, WeightedTermVector]], fh) -> None:
    """Write ``{"id", "term", "weight"}`` lines for inspection."""
    for key, vec in vectors:
        for term, w in vec.weights.items():
            fh.write(json.dumps({"id": key, "scheme": str(vec.scheme), "term": term, "weight": w}) + "\n")
