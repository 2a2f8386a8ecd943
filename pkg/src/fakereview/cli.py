"""Command line driver: ``fakereview {synth,featurize,evaluate,compare}``.

Every subcommand takes ``--config FILE`` (JSON) and command line flags that
override the matching config keys.  Exit codes: 0 success, 1 runtime
failure, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, runner
from .classifiers import TrainingError
from .corpus import FORMATS, CorpusValidationError, CorpusError
from .features import AdmissibilityError, FeatureError
from .synth import SynthConfig
from .textsim import SCHEMES

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2

logger = logging.getLogger("fakereview")


class UsageError(Exception):
    pass


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise runner.ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise runner.ConfigError(f"{path}: top level must be an object")
    return data


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="corpus directory (reviews/reviewers/businesses files)")
    p.add_argument("--format", dest="corpus_format", choices=FORMATS + ("csv-bundle",), help="corpus file format")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--lenient", dest="strict", action="store_false", default=None,
                      help="drop malformed rows instead of failing")
    mode.add_argument("--strict", dest="strict", action="store_true", default=None)
    p.add_argument("--label-policy", help="flag mapping, e.g. YR=fake,NR=non_fake")


def _add_feature_args(p: argparse.ArgumentParser, plural: bool) -> None:
    if plural:
        p.add_argument("--feature-sets", "--feature-set", dest="feature_sets", type=_csv_list,
                       help="comma separated, e.g. FS1,FS2")
        p.add_argument("--schemes", "--scheme", dest="schemes", type=_csv_list,
                       help=f"comma separated subset of {','.join(SCHEMES)}")
    else:
        p.add_argument("--feature-set", dest="feature_sets", type=lambda s: [s], help="FS1..FS5")
        p.add_argument("--scheme", dest="schemes", type=lambda s: [s], help="/".join(SCHEMES))
    p.add_argument("--bm25-k", dest="bm25_k", type=float)
    p.add_argument("--vocab-size", dest="vocab_size", type=int, help="unigram vocabulary size for FS3")
    p.add_argument("--ref-date", dest="ref_date", help="reference date (YYYY-MM-DD) for membership length")
    p.add_argument("--global-normalize", dest="global_normalize", action="store_true", default=None,
                   help="min-max normalize on the whole dataset instead of per training fold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fakereview", description="Fake review detection pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--config", help="JSON synth config")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-reviews", dest="n_reviews", type=int)
    p.add_argument("--n-reviewers", dest="n_reviewers", type=int)
    p.add_argument("--n-businesses", dest="n_businesses", type=int)
    p.add_argument("--fake-fraction", dest="fake_fraction", type=float)
    p.add_argument("--kind", choices=("restaurant", "hotel"))
    p.add_argument("--format", dest="corpus_format", choices=FORMATS, default="jsonl")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("featurize", help="write a feature matrix CSV")
    p.add_argument("--config", help="JSON run config")
    _add_corpus_args(p)
    _add_feature_args(p, plural=False)
    p.add_argument("--out", required=True, help="output CSV path")

    for name, text in (("evaluate", "cross-validate and persist models"),
                       ("compare", "cross-validate a grid and rank it by accuracy")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON run config or a previous run-manifest.json")
        _add_corpus_args(p)
        p.add_argument("--synth", help="JSON synth config to generate the corpus, or 'default'")
        _add_feature_args(p, plural=True)
        p.add_argument("--classifiers", "--classifier", dest="classifiers", type=_csv_list,
                       help="comma separated subset of rf,svm,tree")
        p.add_argument("--k-folds", dest="k_folds", type=int)
        p.add_argument("--seed", type=int, help="seed for folds and learners")
        p.add_argument("--sampling", choices=("none", "under", "over"))
        p.add_argument("--sampling-seed", dest="sampling_seed", type=int)
        p.add_argument("--n-trees", dest="n_trees", type=int)
        p.add_argument("--svm-c", dest="svm_c", type=float)
        p.add_argument("--out", help="output directory")
    return parser


_RUN_KEYS = (
    "corpus", "corpus_format", "strict", "label_policy", "feature_sets", "schemes", "bm25_k",
    "vocab_size", "ref_date", "global_normalize", "classifiers", "k_folds", "seed", "sampling",
    "sampling_seed", "out",
)


def resolve_run_config(args: argparse.Namespace) -> runner.RunConfig:
    data = _read_json(args.config) if args.config else {}
    if "config" in data and isinstance(data["config"], dict):
        data = dict(data["config"])
    for key in _RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if data.get("corpus_format") == "csv-bundle":
        data["corpus_format"] = "csv"
    synth = getattr(args, "synth", None)
    if synth is not None:
        data["synth"] = {} if synth == "default" else _read_json(synth)
        data["corpus"] = None
    elif getattr(args, "corpus", None) is not None:
        data["synth"] = None
    if getattr(args, "n_trees", None) is not None:
        data["forest"] = {**data.get("forest", {}), "n_trees": args.n_trees}
    if getattr(args, "svm_c", None) is not None:
        data["svm"] = {**data.get("svm", {}), "C": args.svm_c}
    return runner.RunConfig.from_dict(data)


def _print_issues(err: CorpusValidationError) -> None:
    print(f"validation failed: {len(err.issues)} rejected row(s)", file=sys.stderr)
    for issue in err.issues:
        print(f"  {issue}", file=sys.stderr)


def cmd_synth(args) -> int:
    data = _read_json(args.config) if args.config else {}
    for key in ("seed", "n_reviews", "n_reviewers", "n_businesses", "fake_fraction", "kind"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    try:
        cfg = SynthConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise runner.ConfigError(str(exc)) from None
    manifest = runner.synth(cfg, args.out, args.corpus_format)
    print(manifest)
    return EXIT_OK


def cmd_featurize(args) -> int:
    cfg = resolve_run_config(args)
    if cfg.corpus is None:
        raise runner.ConfigError("featurize needs --corpus")
    corpus = runner.load_run_corpus(cfg)
    matrix = runner.make_matrix(corpus, cfg, cfg.feature_sets[0], cfg.schemes[0])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(out)
    print(out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = resolve_run_config(args)
    cells, out = runner.evaluate(cfg)
    sys.stdout.write((out / "results.txt").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = resolve_run_config(args)
    cells, out = runner.compare(cfg)
    sys.stdout.write((out / "comparison.txt").read_text(encoding="utf-8"))
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "featurize": cmd_featurize, "evaluate": cmd_evaluate, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except CorpusValidationError as exc:
        _print_issues(exc)
        return EXIT_INVALID
    except (runner.ConfigError, AdmissibilityError, FeatureError, CorpusError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingError, OSError, ValueError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
