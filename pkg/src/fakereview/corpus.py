"""Review corpus: entity types, loading/writing, date cleaning and label mapping.

A corpus is three keyed collections (reviews, reviewers, businesses) plus two
secondary indexes.  Files come either as JSONL (one object per line) or as a
CSV bundle with a header row; both use the snake_case field names of the
dataclasses below.  Extra columns are accepted and ignored.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

logger = logging.getLogger(__name__)

FAKE = "fake"
NON_FAKE = "non_fake"

FLAGS = ("Y", "N", "YR", "NR")
BUSINESS_KINDS = ("restaurant", "hotel")
FORMATS = ("jsonl", "csv")

REVIEWS_FILE = "reviews"
REVIEWERS_FILE = "reviewers"
BUSINESSES_FILE = "businesses"

DATE_FORMAT = "%m-%d-%Y"
_UPDATE_RE = re.compile(r"^\s*Update\s*-\s*", re.IGNORECASE)
_MDY_RE = re.compile(r"^(\d{1,2})-(\d{1,2})-(\d{4})$")
_ISO_RE = re.compile(r"^(\d{4})-(\d{1,2})-(\d{1,2})$")


class CorpusError(Exception):
    """Base class for corpus loading and validation failures."""


@dataclass(frozen=True)
class Issue:
    file: str
    line: int
    field: str | None
    message: str

    def __str__(self) -> str:
        where = f"{self.file}:{self.line}"
        if self.field:
            where += f" [{self.field}]"
        return f"{where}: {self.message}"


class CorpusValidationError(CorpusError):
    """Raised in strict mode when one or more rows are rejected."""

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        head = "; ".join(str(i) for i in self.issues[:5])
        more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(f"{len(self.issues)} rejected row(s): {head}{more}")


class MalformedRowError(CorpusValidationError):
    pass


class DanglingKeyError(CorpusValidationError):
    pass


class InsufficientPopulationError(CorpusError):
    pass


# ---------------------------------------------------------------------------
# dates and labels


def parse_date(raw: str) -> dt.date:
    """Parse ``MM-DD-YYYY`` (canonical) or ISO ``YYYY-MM-DD``."""
    text = raw.strip()
    m = _MDY_RE.match(text)
    if m:
        month, day, year = (int(g) for g in m.groups())
    else:
        m = _ISO_RE.match(text)
        if not m:
            raise ValueError(f"unparseable date {raw!r}")
        year, month, day = (int(g) for g in m.groups())
    try:
        return dt.date(year, month, day)
    except ValueError as exc:
        raise ValueError(f"impossible date {raw!r}: {exc}") from None


def clean_review_date(raw: str) -> tuple[dt.date, bool]:
    """Strip an ``Update -`` marker and parse the remaining date.

    Returns ``(date, was_updated)``.
    """
    if not isinstance(raw, str):
        raise ValueError(f"date must be text, got {type(raw).__name__}")
    stripped, n = _UPDATE_RE.subn("", raw, count=1)
    return parse_date(stripped), bool(n)


def format_date(day: dt.date) -> str:
    return day.strftime(DATE_FORMAT)


def format_review_date(day: dt.date, updated: bool = False) -> str:
    text = format_date(day)
    return f"Update - {text}" if updated else text


@dataclass(frozen=True)
class LabelPolicy:
    """How the filtered-but-updated flags YR/NR map onto the two classes."""

    yr: str = FAKE
    nr: str = NON_FAKE

    def __post_init__(self):
        for name in ("yr", "nr"):
            if getattr(self, name) not in (FAKE, NON_FAKE):
                raise ValueError(f"label policy {name.upper()} must be {FAKE!r} or {NON_FAKE!r}")

    @classmethod
    def parse(cls, text: str | None) -> "LabelPolicy":
        """Parse ``"YR=fake,NR=non_fake"``; empty or ``"default"`` gives the default."""
        if not text or text.strip().lower() == "default":
            return cls()
        kwargs = {}
        for part in text.split(","):
            key, sep, value = part.partition("=")
            key = key.strip().lower()
            if not sep or key not in ("yr", "nr"):
                raise ValueError(f"bad label policy entry {part!r}")
            kwargs[key] = value.strip().lower().replace("-", "_")
        return cls(**kwargs)

    def __str__(self) -> str:
        return f"YR={self.yr},NR={self.nr}"


DEFAULT_POLICY = LabelPolicy()


def map_label(flag: str, policy: LabelPolicy = DEFAULT_POLICY) -> str:
    if flag == "Y":
        return FAKE
    if flag == "N":
        return NON_FAKE
    if flag == "YR":
        return policy.yr
    if flag == "NR":
        return policy.nr
    raise ValueError(f"unknown label token {flag!r}")


# ---------------------------------------------------------------------------
# entities


@dataclass(frozen=True)
class Review:
    review_id: str
    reviewer_id: str
    business_id: str
    date: dt.date
    content: str
    useful_count: int
    cool_count: int
    funny_count: int
    rating: int
    flag: str
    updated: bool = False


@dataclass(frozen=True)
class Reviewer:
    reviewer_id: str
    name: str
    location: str
    join_date: dt.date
    friend_count: int
    review_count: int
    useful_count: int
    cool_count: int
    funny_count: int
    tip_count: int


@dataclass(frozen=True)
class Business:
    business_id: str
    kind: str
    name: str
    location: str
    review_count: int
    site_rating: float


class ReviewCorpus:
    """Immutable collection of reviews, reviewers and businesses.

    Construction validates referential integrity and entity invariants and
    raises :class:`CorpusValidationError` on the first batch of problems.
    """

    def __init__(
        self,
        reviews: Iterable[Review],
        reviewers: Iterable[Reviewer],
        businesses: Iterable[Business],
        rejected: Iterable[Issue] = (),
    ):
        self.reviews: dict[str, Review] = {}
        self.reviewers: dict[str, Reviewer] = {}
        self.businesses: dict[str, Business] = {}
        issues: list[Issue] = []
        for i, b in enumerate(businesses, 1):
            issues += _check_business(b, i)
            if b.business_id in self.businesses:
                issues.append(Issue(BUSINESSES_FILE, i, "business_id", f"duplicate id {b.business_id!r}"))
            self.businesses[b.business_id] = b
        for i, a in enumerate(reviewers, 1):
            issues += _check_reviewer(a, i)
            if a.reviewer_id in self.reviewers:
                issues.append(Issue(REVIEWERS_FILE, i, "reviewer_id", f"duplicate id {a.reviewer_id!r}"))
            self.reviewers[a.reviewer_id] = a
        for i, r in enumerate(reviews, 1):
            issues += _check_review(r, i)
            if r.review_id in self.reviews:
                issues.append(Issue(REVIEWS_FILE, i, "review_id", f"duplicate id {r.review_id!r}"))
            self.reviews[r.review_id] = r
        issues += _check_references(self.reviews.values(), self.reviewers, self.businesses)
        if issues:
            raise CorpusValidationError(issues)

        by_reviewer: dict[str, list[str]] = {k: [] for k in self.reviewers}
        by_business: dict[str, list[str]] = {k: [] for k in self.businesses}
        for r in self.reviews.values():
            by_reviewer[r.reviewer_id].append(r.review_id)
            by_business[r.business_id].append(r.review_id)
        self.by_reviewer = {k: tuple(v) for k, v in by_reviewer.items()}
        self.by_business = {k: tuple(v) for k, v in by_business.items()}

        for rid, ids in self.by_reviewer.items():
            if not ids:
                continue
            first = min(self.reviews[x].date for x in ids)
            if self.reviewers[rid].join_date > first:
                issues.append(
                    Issue(REVIEWERS_FILE, 0, "join_date",
                          f"reviewer {rid!r} joined {self.reviewers[rid].join_date} after first review {first}")
                )
        if issues:
            raise CorpusValidationError(issues)
        self.rejected = tuple(rejected)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.reviews), len(self.reviewers), len(self.businesses)

    @property
    def kind(self) -> str:
        """The shared business kind, or ``"mixed"``."""
        kinds = {b.kind for b in self.businesses.values()}
        if len(kinds) == 1:
            return kinds.pop()
        return "mixed" if kinds else "restaurant"

    def reviews_of(self, reviewer_id: str) -> list[Review]:
        return [self.reviews[x] for x in self.by_reviewer.get(reviewer_id, ())]

    def labels(self, policy: LabelPolicy = DEFAULT_POLICY) -> dict[str, str]:
        return {k: map_label(r.flag, policy) for k, r in self.reviews.items()}

    def max_review_date(self) -> dt.date:
        return max(r.date for r in self.reviews.values())

    def subset(self, review_ids: Iterable[str]) -> "ReviewCorpus":
        """Sub-corpus of the given reviews keeping only referenced reviewers/businesses."""
        ids = list(dict.fromkeys(review_ids))
        reviews = [self.reviews[i] for i in ids]
        who = {r.reviewer_id for r in reviews}
        where = {r.business_id for r in reviews}
        return ReviewCorpus(
            reviews,
            [a for k, a in self.reviewers.items() if k in who],
            [b for k, b in self.businesses.items() if k in where],
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReviewCorpus):
            return NotImplemented
        return (
            self.reviews == other.reviews
            and self.reviewers == other.reviewers
            and self.businesses == other.businesses
        )

    def __repr__(self) -> str:
        n, a, b = self.sizes
        return f"ReviewCorpus(reviews={n}, reviewers={a}, businesses={b})"


def _nonneg(obj, names: Iterable[str], file: str, line: int) -> list[Issue]:
    out = []
    for name in names:
        value = getattr(obj, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            out.append(Issue(file, line, name, f"must be a non-negative integer, got {value!r}"))
    return out


def _check_review(r: Review, line: int) -> list[Issue]:
    out = _nonneg(r, ("useful_count", "cool_count", "funny_count"), REVIEWS_FILE, line)
    if not isinstance(r.rating, int) or isinstance(r.rating, bool) or not 1 <= r.rating <= 5:
        out.append(Issue(REVIEWS_FILE, line, "rating", f"must be an integer in 1..5, got {r.rating!r}"))
    if r.flag not in FLAGS:
        out.append(Issue(REVIEWS_FILE, line, "flag", f"must be one of {FLAGS}, got {r.flag!r}"))
    if not r.review_id:
        out.append(Issue(REVIEWS_FILE, line, "review_id", "empty id"))
    return out


def _check_reviewer(a: Reviewer, line: int) -> list[Issue]:
    out = _nonneg(
        a,
        ("friend_count", "review_count", "useful_count", "cool_count", "funny_count", "tip_count"),
        REVIEWERS_FILE,
        line,
    )
    if not a.reviewer_id:
        out.append(Issue(REVIEWERS_FILE, line, "reviewer_id", "empty id"))
    return out


def _check_business(b: Business, line: int) -> list[Issue]:
    out = _nonneg(b, ("review_count",), BUSINESSES_FILE, line)
    if b.kind not in BUSINESS_KINDS:
        out.append(Issue(BUSINESSES_FILE, line, "kind", f"must be one of {BUSINESS_KINDS}, got {b.kind!r}"))
    if not 1.0 <= b.site_rating <= 5.0:
        out.append(Issue(BUSINESSES_FILE, line, "site_rating", f"must lie in [1, 5], got {b.site_rating!r}"))
    if not b.business_id:
        out.append(Issue(BUSINESSES_FILE, line, "business_id", "empty id"))
    return out


def _check_references(reviews, reviewers: Mapping, businesses: Mapping) -> list[Issue]:
    out = []
    for i, r in enumerate(reviews, 1):
        if r.reviewer_id not in reviewers:
            out.append(Issue(REVIEWS_FILE, i, "reviewer_id", f"dangling key {r.reviewer_id!r}"))
        if r.business_id not in businesses:
            out.append(Issue(REVIEWS_FILE, i, "business_id", f"dangling key {r.business_id!r}"))
    return out


# ---------------------------------------------------------------------------
# row parsing


def _as_int(value, name: str) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{name}: expected integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and re.fullmatch(r"\s*-?\d+\s*", value):
        return int(value)
    raise ValueError(f"{name}: expected integer, got {value!r}")


def _as_float(value, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name}: expected number, got {value!r}") from None


def _as_str(value, name: str) -> str:
    if value is None:
        raise ValueError(f"{name}: missing")
    return str(value)


class _RowError(Exception):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(message)


def _get(row: Mapping, name: str):
    if name not in row:
        raise _RowError(name, "missing field")
    return row[name]


def _wrap(name: str, conv, row: Mapping):
    try:
        return conv(_get(row, name), name)
    except _RowError:
        raise
    except (ValueError, TypeError) as exc:
        raise _RowError(name, str(exc)) from None


def _date_field(value, name: str) -> dt.date:
    return parse_date(_as_str(value, name))


def review_from_row(row: Mapping) -> Review:
    try:
        day, updated = clean_review_date(_as_str(_get(row, "date"), "date"))
    except _RowError:
        raise
    except ValueError as exc:
        raise _RowError("date", str(exc)) from None
    updated = updated or _truthy(row.get("updated", False))
    rating = _wrap("rating", _as_int, row)
    if not 1 <= rating <= 5:
        raise _RowError("rating", f"must be in 1..5, got {rating}")
    flag = _wrap("flag", _as_str, row).strip()
    if flag not in FLAGS:
        raise _RowError("flag", f"must be one of {FLAGS}, got {flag!r}")
    review = Review(
        review_id=_wrap("review_id", _as_str, row),
        reviewer_id=_wrap("reviewer_id", _as_str, row),
        business_id=_wrap("business_id", _as_str, row),
        date=day,
        content=_wrap("content", _as_str, row),
        useful_count=_wrap("useful_count", _as_int, row),
        cool_count=_wrap("cool_count", _as_int, row),
        funny_count=_wrap("funny_count", _as_int, row),
        rating=rating,
        flag=flag,
        updated=updated,
    )
    _raise_first(_check_review(review, 0))
    return review


def reviewer_from_row(row: Mapping) -> Reviewer:
    reviewer = Reviewer(
        reviewer_id=_wrap("reviewer_id", _as_str, row),
        name=_as_str(row.get("name", ""), "name"),
        location=_as_str(row.get("location", ""), "location"),
        join_date=_wrap("join_date", _date_field, row),
        friend_count=_wrap("friend_count", _as_int, row),
        review_count=_wrap("review_count", _as_int, row),
        useful_count=_wrap("useful_count", _as_int, row),
        cool_count=_wrap("cool_count", _as_int, row),
        funny_count=_wrap("funny_count", _as_int, row),
        tip_count=_wrap("tip_count", _as_int, row),
    )
    _raise_first(_check_reviewer(reviewer, 0))
    return reviewer


def business_from_row(row: Mapping) -> Business:
    business = Business(
        business_id=_wrap("business_id", _as_str, row),
        kind=_wrap("kind", _as_str, row).strip().lower(),
        name=_as_str(row.get("name", ""), "name"),
        location=_as_str(row.get("location", ""), "location"),
        review_count=_wrap("review_count", _as_int, row),
        site_rating=_wrap("site_rating", _as_float, row),
    )
    _raise_first(_check_business(business, 0))
    return business


def _raise_first(issues: list[Issue]) -> None:
    if issues:
        raise _RowError(issues[0].field or "", issues[0].message)


def _truthy(value) -> bool:
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "y")
    return bool(value)


# ---------------------------------------------------------------------------
# file I/O


def _bundle_path(root: Path, stem: str, fmt: str) -> Path:
    return root / f"{stem}.{fmt}"


def _iter_jsonl(path: Path) -> Iterator[tuple[int, Mapping | None, str | None]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(obj, dict):
                yield lineno, None, "expected a JSON object"
                continue
            yield lineno, obj, None


def _iter_csv(path: Path) -> Iterator[tuple[int, Mapping | None, str | None]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            # header is line 1
            yield reader.line_num, row, None


def _read_entities(path: Path, fmt: str, build, stem: str) -> tuple[list, list[Issue]]:
    rows = _iter_jsonl(path) if fmt == "jsonl" else _iter_csv(path)
    items, issues = [], []
    for lineno, row, err in rows:
        if err is not None:
            issues.append(Issue(path.name, lineno, None, err))
            continue
        try:
            items.append((lineno, build(row)))
        except _RowError as exc:
            issues.append(Issue(path.name, lineno, exc.field, str(exc)))
    return items, issues


def load_corpus(path: str | Path, format: str = "jsonl", strict: bool = True) -> ReviewCorpus:
    """Load a corpus directory holding ``reviews``, ``reviewers`` and ``businesses`` files.

    In strict mode any rejected row raises :class:`MalformedRowError` (bad
    field values) or :class:`DanglingKeyError` (unresolved foreign key).  With
    ``strict=False`` offending rows are dropped, reviews pointing at dropped or
    missing entities go with them, and the issues are kept on
    ``corpus.rejected``.
    """
    fmt = {"csv-bundle": "csv"}.get(format, format)
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    paths = {stem: _bundle_path(root, stem, fmt) for stem in (REVIEWS_FILE, REVIEWERS_FILE, BUSINESSES_FILE)}
    for p in paths.values():
        if not p.is_file():
            raise FileNotFoundError(f"missing corpus file: {p}")

    businesses, issues = _read_entities(paths[BUSINESSES_FILE], fmt, business_from_row, BUSINESSES_FILE)
    reviewers, more = _read_entities(paths[REVIEWERS_FILE], fmt, reviewer_from_row, REVIEWERS_FILE)
    issues += more
    reviews, more = _read_entities(paths[REVIEWS_FILE], fmt, review_from_row, REVIEWS_FILE)
    issues += more
    malformed = list(issues)

    b_ids = {b.business_id for _, b in businesses}
    a_ids = {a.reviewer_id for _, a in reviewers}
    dangling = []
    kept_reviews = []
    fname = paths[REVIEWS_FILE].name
    for lineno, r in reviews:
        bad = False
        if r.reviewer_id not in a_ids:
            dangling.append(Issue(fname, lineno, "reviewer_id", f"dangling key {r.reviewer_id!r}"))
            bad = True
        if r.business_id not in b_ids:
            dangling.append(Issue(fname, lineno, "business_id", f"dangling key {r.business_id!r}"))
            bad = True
        if not bad:
            kept_reviews.append(r)

    if strict and malformed:
        raise MalformedRowError(malformed + dangling)
    if strict and dangling:
        raise DanglingKeyError(dangling)
    all_issues = malformed + dangling
    for issue in all_issues:
        logger.warning("rejected row %s", issue)
    return ReviewCorpus(kept_reviews, [a for _, a in reviewers], [b for _, b in businesses], rejected=all_issues)


REVIEW_COLUMNS = [
    "review_id", "reviewer_id", "business_id", "date", "content",
    "useful_count", "cool_count", "funny_count", "rating", "flag",
]


def _review_record(r: Review) -> dict:
    return {
        "review_id": r.review_id,
        "reviewer_id": r.reviewer_id,
        "business_id": r.business_id,
        "date": format_review_date(r.date, r.updated),
        "content": r.content,
        "useful_count": r.useful_count,
        "cool_count": r.cool_count,
        "funny_count": r.funny_count,
        "rating": r.rating,
        "flag": r.flag,
    }


def _reviewer_record(a: Reviewer) -> dict:
    rec = {f.name: getattr(a, f.name) for f in fields(Reviewer)}
    rec["join_date"] = format_date(a.join_date)
    return rec


def _business_record(b: Business) -> dict:
    return {f.name: getattr(b, f.name) for f in fields(Business)}


def write_corpus(corpus: ReviewCorpus, path: str | Path, format: str = "jsonl") -> list[Path]:
    """Write the three entity files into ``path`` and return their paths."""
    fmt = {"csv-bundle": "csv"}.get(format, format)
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {format!r}")
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    tables = {
        REVIEWS_FILE: [_review_record(r) for r in corpus.reviews.values()],
        REVIEWERS_FILE: [_reviewer_record(a) for a in corpus.reviewers.values()],
        BUSINESSES_FILE: [_business_record(b) for b in corpus.businesses.values()],
    }
    headers = {
        REVIEWS_FILE: REVIEW_COLUMNS,
        REVIEWERS_FILE: [f.name for f in fields(Reviewer)],
        BUSINESSES_FILE: [f.name for f in fields(Business)],
    }
    written = []
    for stem, records in tables.items():
        out = _bundle_path(root, stem, fmt)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            if fmt == "jsonl":
                for rec in records:
                    fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=False) + "\n")
            else:
                writer = csv.DictWriter(fh, fieldnames=headers[stem], lineterminator="\n")
                writer.writeheader()
                writer.writerows(records)
        written.append(out)
    return written


# ---------------------------------------------------------------------------
# sampling of balanced experiment datasets


def balanced_sample(
    corpus: ReviewCorpus,
    n_per_class: int,
    seed: int = 0,
    policy: LabelPolicy = DEFAULT_POLICY,
) -> ReviewCorpus:
    """Draw exactly ``n_per_class`` fake and non-fake reviews (without replacement)."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    labels = corpus.labels(policy)
    by_class = {FAKE: [], NON_FAKE: []}
    for rid, lab in labels.items():
        by_class[lab].append(rid)
    rng = np.random.default_rng(seed)
    chosen = set()
    for lab in (FAKE, NON_FAKE):
        pool = by_class[lab]
        if len(pool) < n_per_class:
            raise InsufficientPopulationError(
                f"need {n_per_class} {lab} reviews, corpus has {len(pool)}"
            )
        picks = rng.choice(len(pool), size=n_per_class, replace=False)
        chosen.update(pool[i] for i in picks)
    # preserve corpus order
    return corpus.subset(rid for rid in corpus.reviews if rid in chosen)
