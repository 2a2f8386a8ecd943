"""Random forest of Gini trees with impurity-based feature importance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .tree import DecisionTree, TreeParams, TrainingError, _check_dims, _check_training, _grow


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    bootstrap: bool = True
    seed: int = 0
    tree: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def default_candidates(n_features: int) -> int:
    return max(1, int(round(math.sqrt(n_features))))


class ForestModel:
    def __init__(self, trees: list[DecisionTree], params: ForestParams, columns: Sequence[str] | None = None):
        self.trees = list(trees)
        self.params = params
        self.n_features = trees[0].n_features if trees else 0
        self.columns = list(columns) if columns is not None else [f"x{i}" for i in range(self.n_features)]

    def raw_importance(self) -> np.ndarray:
        total = np.zeros(self.n_features, dtype=np.float64)
        for t in self.trees:
            total += t.importance()
        return total

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = _check_dims(X, self.n_features)
        out = np.zeros(X.shape[0], dtype=np.int64)
        for t in self.trees:
            out += t.leaf_label[t.apply(X)]
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        # ties resolve to non_fake
        return (2 * self.votes(X) > len(self.trees)).astype(np.int8)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams = ForestParams(),
    columns: Sequence[str] | None = None,
) -> ForestModel:
    """Bagged trees; each tree gets its own random stream spawned from ``params.seed``."""
    X, y = _check_training(X, y)
    n, d = X.shape
    tree_params = params.tree
    n_cand = tree_params.n_candidate_features
    n_cand = default_candidates(d) if n_cand is None else min(n_cand, d)
    streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n, dtype=np.int64)
        trees.append(_grow(X, y, rows.astype(np.int64), tree_params, n_cand, rng))
    return ForestModel(trees, params, columns)


def forest_importance(model: ForestModel) -> list[tuple[str, float]]:
    """Features ranked by importance, scores normalized to sum to 100.

    A forest that never split gets a uniform ranking.
    """
    if not isinstance(model, ForestModel) or not model.trees:
        raise TrainingError("importance needs a trained forest")
    raw = model.raw_importance()
    total = raw.sum()
    if total > 0:
        scores = 100.0 * raw / total
    else:
        scores = np.full(model.n_features, 100.0 / model.n_features)
    order = sorted(range(model.n_features), key=lambda j: (-scores[j], j))
    return [(model.columns[j], float(scores[j])) for j in order]
