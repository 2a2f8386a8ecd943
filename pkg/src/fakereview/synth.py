"""Seeded synthetic review corpora.

Stands in for real review-filter data.  Spam reviewers post fake reviews and
each spam behaviour is switched on with its own rate, so experiments can make
labels depend on one behaviour at a time:

* ``duplicate_text_rate``  fake review copies one of the author's earlier reviews
* ``burst_rate``           spammer posts all reviews inside a few days
* ``rating_deviation``     fake rating sits at the extreme opposite the business quality
* ``positive_skew``        fake rating forced to 5 stars
* ``vote_signal``          spammer account carries few votes and friends

Every value is drawn from a single ``numpy`` generator seeded from
``SynthConfig.seed``, in a fixed order, so a config fully determines the
corpus.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .corpus import BUSINESS_KINDS, Business, Review, ReviewCorpus, Reviewer

_WORDS = """
food service place great good really like just time back go ordered table staff
menu delicious friendly restaurant best dinner lunch night chicken pizza amazing
nice little love try came order went wait price prices well experience meal also
definitely always get us one bar fresh made sauce drinks never salad people
better come side dish bit tasty lot two favorite ever pretty atmosphere server
first room hotel stay bed clean location breakfast pool desk view night walk
minutes coffee beer wine cheese bread rice soup beef pork fish shrimp sushi taco
burger fries sandwich steak dessert cake sweet spicy hot cold small large huge
quick slow loud quiet busy empty cozy cheap expensive worth disappointed rude
perfect awesome excellent terrible horrible okay decent average outstanding
recommend return visit again highly overall portion portions flavor flavors
bland salty crispy tender juicy perfectly cooked waitress waiter manager owner
parking downtown street corner weekend weekday happy hour brunch patio seating
reservation crowd line music decor vibe kitchen chef special specials order
""".split()

_PROPER = """
Vegas Phoenix Chicago Austin Seattle Boston Denver Portland Tuesday Friday
Saturday Sunday Mexican Italian Thai Chinese Indian French Yelp
""".split()

_CITIES = ("Las Vegas, NV", "Phoenix, AZ", "Chicago, IL", "Austin, TX", "Seattle, WA", "Boston, MA")


@dataclass(frozen=True)
class SynthConfig:
    n_reviewers: int = 1964
    n_businesses: int = 31
    n_reviews: int = 2060
    fake_fraction: float = 0.5
    kind: str = "restaurant"
    duplicate_text_rate: float = 0.3
    burst_rate: float = 0.3
    rating_deviation: float = 0.5
    positive_skew: float = 0.3
    vote_signal: float = 0.3
    variant_flag_rate: float = 0.05
    updated_rate: float = 0.05
    start_date: str = "2010-01-01"
    span_days: int = 1500
    seed: int = 7

    def __post_init__(self):
        for name in ("n_reviewers", "n_businesses", "n_reviews", "span_days"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        for name in ("fake_fraction", "duplicate_text_rate", "burst_rate", "rating_deviation",
                     "positive_skew", "vote_signal", "variant_flag_rate", "updated_rate"):
            value = getattr(self, name)
            if not 0.0 <= float(value) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if self.kind not in BUSINESS_KINDS:
            raise ValueError(f"kind must be one of {BUSINESS_KINDS}, got {self.kind!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        dt.date.fromisoformat(self.start_date)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _allocate(n_items: int, n_owners: int, rng: np.random.Generator) -> np.ndarray:
    """Split ``n_items`` among ``n_owners``; everyone gets one first if possible."""
    counts = np.zeros(n_owners, dtype=np.int64)
    if n_owners == 0 or n_items == 0:
        return counts
    base = min(1, n_items // n_owners)
    counts += base
    rest = n_items - base * n_owners
    if rest:
        # heavy-tailed activity: most accounts post once, a few post a lot
        weights = rng.pareto(1.5, size=n_owners) + 0.05
        counts += rng.multinomial(rest, weights / weights.sum())
    return counts


def _spam_reviewer_count(cfg: SynthConfig, n_fake: int) -> int:
    if n_fake == 0:
        return 0
    if n_fake == cfg.n_reviews:
        return cfg.n_reviewers
    n = int(round(cfg.fake_fraction * cfg.n_reviewers))
    return int(min(max(n, 1), n_fake, cfg.n_reviewers - 1))


def _make_text(rng: np.random.Generator, weights: np.ndarray) -> str:
    n_sent = int(rng.integers(2, 6))
    sentences = []
    for _ in range(n_sent):
        n_words = int(rng.integers(4, 13))
        words = list(rng.choice(_WORDS, size=n_words, p=weights))
        if rng.random() < 0.25:
            words[int(rng.integers(0, n_words))] = str(rng.choice(_PROPER))
        words[0] = words[0].capitalize()
        sentences.append(" ".join(words) + ".")
    return " ".join(sentences)


def _mutate(text: str, rng: np.random.Generator) -> str:
    words = text.split(" ")
    for i in range(len(words)):
        if rng.random() < 0.1:
            words[i] = str(rng.choice(_WORDS))
    return " ".join(words)


def generate_synthetic(config: SynthConfig) -> ReviewCorpus:
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    start = dt.date.fromisoformat(cfg.start_date)
    zipf = 1.0 / np.arange(1, len(_WORDS) + 1) ** 0.8
    zipf /= zipf.sum()

    n_fake = int(round(cfg.fake_fraction * cfg.n_reviews))
    n_genuine = cfg.n_reviews - n_fake
    n_spam = _spam_reviewer_count(cfg, n_fake)

    # businesses
    quality = np.round(rng.uniform(1.5, 4.5, size=cfg.n_businesses), 1)
    b_ids = [f"b{i:05d}" for i in range(cfg.n_businesses)]

    # reviewers and their share of reviews
    order = rng.permutation(cfg.n_reviewers)
    is_spam = np.zeros(cfg.n_reviewers, dtype=bool)
    is_spam[order[:n_spam]] = True
    per_reviewer = np.zeros(cfg.n_reviewers, dtype=np.int64)
    per_reviewer[is_spam] = _allocate(n_fake, n_spam, rng)
    per_reviewer[~is_spam] = _allocate(n_genuine, cfg.n_reviewers - n_spam, rng)

    reviews: list[Review] = []
    reviewers: list[Reviewer] = []
    serial = 0
    for a in range(cfg.n_reviewers):
        spam = bool(is_spam[a])
        n_a = int(per_reviewer[a])
        rid = f"u{a:06d}"

        burst = spam and rng.random() < cfg.burst_rate
        if burst:
            day0 = int(rng.integers(0, cfg.span_days))
            offsets = day0 + rng.integers(0, 3, size=n_a)
        else:
            offsets = rng.integers(0, cfg.span_days, size=n_a)
        offsets = np.sort(offsets)
        dates = [start + dt.timedelta(days=int(o)) for o in offsets]

        businesses = rng.integers(0, cfg.n_businesses, size=n_a)
        texts: list[str] = []
        for j in range(n_a):
            q = float(quality[businesses[j]])
            rating = int(np.clip(np.rint(q + rng.normal(0.0, 0.8)), 1, 5))
            if spam:
                if rng.random() < cfg.rating_deviation:
                    rating = 1 if q >= 3.0 else 5
                elif rng.random() < cfg.positive_skew:
                    rating = 5
            if spam and texts and rng.random() < cfg.duplicate_text_rate:
                text = _mutate(texts[int(rng.integers(0, len(texts)))], rng)
            else:
                text = _make_text(rng, zipf)
            texts.append(text)
            variant = rng.random() < cfg.variant_flag_rate
            flag = ("YR" if variant else "Y") if spam else ("NR" if variant else "N")
            reviews.append(
                Review(
                    review_id=f"r{serial:07d}",
                    reviewer_id=rid,
                    business_id=b_ids[int(businesses[j])],
                    date=dates[j],
                    content=text,
                    useful_count=int(rng.poisson(1.0)),
                    cool_count=int(rng.poisson(0.5)),
                    funny_count=int(rng.poisson(0.4)),
                    rating=rating,
                    flag=flag,
                    updated=bool(rng.random() < cfg.updated_rate),
                )
            )
            serial += 1

        low_votes = spam and rng.random() < cfg.vote_signal
        scale = np.exp(rng.normal(0.5, 0.7)) if low_votes else np.exp(rng.normal(3.0, 1.0))
        useful = int(rng.poisson(scale))
        first = dates[0] if dates else start + dt.timedelta(days=cfg.span_days)
        reviewers.append(
            Reviewer(
                reviewer_id=rid,
                name=f"User {a}",
                location=str(rng.choice(_CITIES)),
                join_date=first - dt.timedelta(days=int(rng.integers(0, 2000))),
                friend_count=int(rng.poisson(scale * 0.6)),
                review_count=n_a + int(rng.geometric(0.05)) - 1,
                useful_count=useful,
                cool_count=int(rng.binomial(useful, 0.6)),
                funny_count=int(rng.binomial(useful, 0.4)),
                tip_count=int(rng.poisson(3.0)),
            )
        )

    in_corpus = np.zeros(cfg.n_businesses, dtype=np.int64)
    for r in reviews:
        in_corpus[int(r.business_id[1:])] += 1
    businesses_out = [
        Business(
            business_id=b_ids[i],
            kind=cfg.kind,
            name=f"{cfg.kind.title()} {i}",
            location=str(rng.choice(_CITIES)),
            review_count=int(in_corpus[i] + rng.integers(0, 200)),
            site_rating=float(np.clip(quality[i], 1.0, 5.0)),
        )
        for i in range(cfg.n_businesses)
    ]
    return ReviewCorpus(reviews, reviewers, businesses_out)
