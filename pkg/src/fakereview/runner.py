"""Experiment driver behind the CLI: resolved run configs, evaluation grids, outputs."""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .classifiers import CLASSIFIERS, ForestParams, ModelSpec, SvmParams, TreeParams, forest_importance, save_model
from .corpus import LabelPolicy, ReviewCorpus, balanced_sample, load_corpus, write_corpus
from .evaluation import (
    RESULT_COLUMNS,
    CvReport,
    ResultRow,
    cross_validate,
    format_table,
    write_table_csv,
)
from .features import (
    DISPLAY_NAMES,
    FEATURE_SETS,
    FeatureMatrix,
    build_feature_matrix,
    feature_set,
    fit_normalizer,
)
from .sampling import SamplingPlan, sample_indices
from .synth import SynthConfig, generate_synthetic
from .textsim import SCHEMES, WeightingScheme

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus: str | None = None
    corpus_format: str = "jsonl"
    strict: bool = True
    synth: dict | None = None
    balance_per_class: int | None = None
    balance_seed: int = 0
    feature_sets: list[str] = field(default_factory=lambda: ["FS2"])
    schemes: list[str] = field(default_factory=lambda: ["LTC"])
    bm25_k: float = 1.2
    classifiers: list[str] = field(default_factory=lambda: ["rf"])
    tree: dict = field(default_factory=dict)
    forest: dict = field(default_factory=dict)
    svm: dict = field(default_factory=dict)
    sampling: str = "none"
    sampling_seed: int = 0
    k_folds: int = 10
    seed: int = 0
    global_normalize: bool = False
    label_policy: str = "YR=fake,NR=non_fake"
    ref_date: str | None = None
    vote_source: str = "reviewer"
    lemmatize: bool = True
    stopwords: bool = False
    vocab_size: int = 2000
    out: str = "results"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # a run manifest
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        for name in ("feature_sets", "schemes", "classifiers"):
            if isinstance(getattr(self, name), str):
                setattr(self, name, _split_list(getattr(self, name)))
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        self.feature_sets = [f.upper() for f in self.feature_sets]
        self.schemes = [s.upper() for s in self.schemes]
        self.classifiers = [c.lower() for c in self.classifiers]
        for fs in self.feature_sets:
            if fs not in FEATURE_SETS:
                raise ConfigError(f"unknown feature set {fs!r}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown weighting scheme {s!r}")
        for c in self.classifiers:
            if c not in CLASSIFIERS:
                raise ConfigError(f"unknown classifier {c!r}")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be at least 2")
        if self.corpus is None and self.synth is None:
            raise ConfigError("no corpus source: give a corpus path or a synth config")
        try:
            SamplingPlan(self.sampling, self.sampling_seed)
            LabelPolicy.parse(self.label_policy)
            WeightingScheme("BM25", self.bm25_k)
            self.model_spec("rf")
            if self.synth is not None:
                SynthConfig.from_dict(self.synth)
            if self.ref_date is not None:
                dt.date.fromisoformat(self.ref_date)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def model_spec(self, kind: str) -> ModelSpec:
        tree = TreeParams(**self.tree)
        forest = dict(self.forest)
        forest.setdefault("seed", self.seed)
        svm = dict(self.svm)
        svm.setdefault("seed", self.seed)
        return ModelSpec(kind, tree, ForestParams(tree=tree, **forest), SvmParams(**svm))

    @property
    def sampling_plan(self) -> SamplingPlan:
        return SamplingPlan(self.sampling, self.sampling_seed)

    @property
    def policy(self) -> LabelPolicy:
        return LabelPolicy.parse(self.label_policy)

    def cells(self) -> list[tuple[str, str, str]]:
        return [(c, fs, s) for c in self.classifiers for fs in self.feature_sets for s in self.schemes]


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def load_run_corpus(cfg: RunConfig) -> ReviewCorpus:
    if cfg.corpus is not None:
        corpus = load_corpus(cfg.corpus, cfg.corpus_format, strict=cfg.strict)
    else:
        corpus = generate_synthetic(SynthConfig.from_dict(cfg.synth or {}))
    if cfg.balance_per_class:
        corpus = balanced_sample(corpus, cfg.balance_per_class, cfg.balance_seed, cfg.policy)
    return corpus


def make_matrix(corpus: ReviewCorpus, cfg: RunConfig, fs: str, scheme: str) -> FeatureMatrix:
    spec = feature_set(
        fs,
        WeightingScheme(scheme, cfg.bm25_k),
        vocab_size=cfg.vocab_size if fs == "FS3" else None,
        vote_source=cfg.vote_source,
        lemmatize=cfg.lemmatize,
        stopwords=cfg.stopwords,
    )
    ref = dt.date.fromisoformat(cfg.ref_date) if cfg.ref_date else None
    matrix = build_feature_matrix(corpus, spec, cfg.policy, ref)
    if cfg.global_normalize:
        matrix = matrix.normalized(fit_normalizer(matrix.dense))
    return matrix


@dataclass
class CellResult:
    classifier: str
    feature_set: str
    scheme: str
    report: CvReport
    model: Any
    normalizer: Any
    importance: list[tuple[str, float]] | None

    @property
    def row(self) -> ResultRow:
        return ResultRow(self.classifier, self.feature_set, self.scheme, self.report.mean)


def fit_full(matrix: FeatureMatrix, spec: ModelSpec, cfg: RunConfig):
    """Model on the whole (normalized, sampled) dataset, for persistence and importance."""
    data = matrix
    if data.documents is not None:
        from .features import build_vocab

        data = data.with_vocab(build_vocab(data.documents, data.vocab_size))
    normalizer = None
    if not cfg.global_normalize:
        normalizer = fit_normalizer(data.dense)
        data = data.normalized(normalizer)
    if cfg.sampling != "none":
        data = data.take(sample_indices(data.y, cfg.sampling_plan))
    return spec.train(data.values, data.y, data.columns), normalizer or matrix.normalizer


def run_grid(corpus: ReviewCorpus, cfg: RunConfig) -> list[CellResult]:
    """Cross-validate every (classifier, feature set, scheme) cell on shared folds."""
    for fs in cfg.feature_sets:
        feature_set(fs).check_admissible(corpus.kind)
    matrices: dict[tuple[str, str], FeatureMatrix] = {}
    out = []
    for clf, fs, scheme in cfg.cells():
        key = (fs, scheme)
        if key not in matrices:
            matrices[key] = make_matrix(corpus, cfg, fs, scheme)
        matrix = matrices[key]
        spec = cfg.model_spec(clf)
        logger.info("cross-validating %s / %s / %s", clf, fs, scheme)
        report = cross_validate(
            matrix, spec, cfg.sampling_plan, cfg.k_folds, cfg.seed, normalize=not cfg.global_normalize
        )
        model, normalizer = fit_full(matrix, spec, cfg)
        importance = forest_importance(model) if clf == "rf" else None
        out.append(CellResult(clf, fs, scheme, report, model, normalizer, importance))
    return out


# ---------------------------------------------------------------------------
# outputs


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=False)
        fh.write("\n")


def results_rows(cells: list[CellResult]) -> list[list[str]]:
    return [c.row.cells() for c in cells]


IMPORTANCE_COLUMNS = ("Classifier", "FeatureSet", "WeightingScheme", "Rank", "Feature", "Score")


def importance_rows(cells: list[CellResult]) -> list[list[str]]:
    rows = []
    for c in cells:
        if c.importance is None:
            continue
        base = c.row.cells()[:3]
        for rank, (name, score) in enumerate(c.importance, 1):
            label = DISPLAY_NAMES.get(name, name)
            rows.append(base + [str(rank), label, f"{score:.3f}"])
    return rows


def folds_payload(corpus_ids: list[str], cells: list[CellResult], cfg: RunConfig) -> dict:
    first = cells[0].report
    assignment = [0] * len(corpus_ids)
    for i, f in enumerate(first.folds):
        for j in f.test_index:
            assignment[int(j)] = i
    return {
        "k": cfg.k_folds,
        "seed": cfg.seed,
        "review_ids": corpus_ids,
        "assignment": assignment,
        "cells": [
            {
                "classifier": c.classifier,
                "feature_set": c.feature_set,
                "scheme": c.scheme,
                "folds": [
                    {"fold": i, "confusion": f.confusion.to_dict(), "metrics": f.metrics.to_dict()}
                    for i, f in enumerate(c.report.folds)
                ],
                "mean": c.report.mean.to_dict(),
                "pooled": c.report.pooled.to_dict(),
            }
            for c in cells
        ],
    }


def model_filename(cell: CellResult, single: bool) -> str:
    if single:
        return "model.json"
    return f"model_{cell.classifier}_{cell.feature_set}_{cell.scheme}.json"


def write_manifest(out: Path, cfg: RunConfig, corpus: ReviewCorpus, files: list[Path]) -> Path:
    n, a, b = corpus.sizes
    manifest = {
        "tool": "fakereview",
        "version": __version__,
        "config": cfg.to_dict(),
        "seeds": {
            "cv": cfg.seed,
            "sampling": cfg.sampling_seed,
            "forest": cfg.model_spec("rf").forest.seed,
            "svm": cfg.model_spec("svm").svm.seed,
            "synth": (cfg.synth or {}).get("seed", SynthConfig().seed) if cfg.synth is not None else None,
        },
        "corpus": {"reviews": n, "reviewers": a, "businesses": b, "kind": corpus.kind},
        "outputs": {p.name: _sha256(p) for p in files},
    }
    path = out / "run-manifest.json"
    _dump_json(path, manifest)
    return path


def evaluate(cfg: RunConfig) -> tuple[list[CellResult], Path]:
    out = Path(cfg.out)
    corpus = load_run_corpus(cfg)
    cells = run_grid(corpus, cfg)
    out.mkdir(parents=True, exist_ok=True)

    files = []
    rows = results_rows(cells)
    write_table_csv(out / "results.csv", RESULT_COLUMNS, rows)
    (out / "results.txt").write_text(format_table(RESULT_COLUMNS, rows), encoding="utf-8")
    files += [out / "results.csv", out / "results.txt"]
    imp = importance_rows(cells)
    if imp:
        write_table_csv(out / "importance.csv", IMPORTANCE_COLUMNS, imp)
        (out / "importance.txt").write_text(format_table(IMPORTANCE_COLUMNS, imp), encoding="utf-8")
        files += [out / "importance.csv", out / "importance.txt"]
    _dump_json(out / "folds.json", folds_payload(list(corpus.reviews), cells, cfg))
    files.append(out / "folds.json")
    single = len(cells) == 1
    for c in cells:
        path = out / model_filename(c, single)
        save_model(c.model, path, c.normalizer)
        files.append(path)
    write_manifest(out, cfg, corpus, files)
    return cells, out


COMPARISON_COLUMNS = RESULT_COLUMNS


def compare(cfg: RunConfig) -> tuple[list[CellResult], Path]:
    if len(cfg.cells()) < 2:
        raise ConfigError("compare needs at least two configurations (classifiers x feature sets x schemes)")
    out = Path(cfg.out)
    corpus = load_run_corpus(cfg)
    cells = run_grid(corpus, cfg)
    ranked = sorted(range(len(cells)), key=lambda i: (-cells[i].report.mean.accuracy, i))
    rows = [cells[i].row.cells() for i in ranked]
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(out / "comparison.csv", COMPARISON_COLUMNS, rows)
    (out / "comparison.txt").write_text(format_table(COMPARISON_COLUMNS, rows), encoding="utf-8")
    _dump_json(out / "folds.json", folds_payload(list(corpus.reviews), cells, cfg))
    files = [out / "comparison.csv", out / "comparison.txt", out / "folds.json"]
    write_manifest(out, cfg, corpus, files)
    return [cells[i] for i in ranked], out


def synth(config: SynthConfig, out: str | Path, format: str = "jsonl") -> Path:
    out = Path(out)
    corpus = generate_synthetic(config)
    files = write_corpus(corpus, out, format)
    manifest = {
        "tool": "fakereview",
        "version": __version__,
        "format": format,
        "seed": config.seed,
        "config": config.to_dict(),
        "sizes": dict(zip(("reviews", "reviewers", "businesses"), corpus.sizes)),
        "files": {p.name: _sha256(p) for p in files},
    }
    path = out / "manifest.json"
    _dump_json(path, manifest)
    return path
